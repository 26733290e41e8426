"""Optional on-disk cache keyed by content.

Set ``LATORBIT_CACHE_DIR`` to persist enumeration-derived data across
processes.  Entries are plain ``.npz`` files and may be deleted at any time.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

import numpy as np


def cache_dir() -> Path | None:
    d = os.environ.get("LATORBIT_CACHE_DIR")
    return Path(d) if d else None


def _path(key: str) -> Path | None:
    d = cache_dir()
    if d is None:
        return None
    h = hashlib.sha256(key.encode()).hexdigest()[:24]
    return d / f"{h}.npz"


def cached_arrays(key: str, build):
    """Return ``build()`` (a dict of arrays), loading or storing it on disk."""
    p = _path(key)
    if p is not None and p.exists():
        with np.load(p) as z:
            if str(z["__key__"]) == key:
                return {k: z[k] for k in z.files if k != "__key__"}
    out = build()
    if p is not None:
        p.parent.mkdir(parents=True, exist_ok=True)
        tmp = p.with_suffix(".tmp.npz")
        np.savez(tmp, __key__=np.array(key), **out)
        os.replace(tmp, p)
    return out
