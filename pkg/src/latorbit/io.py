"""Matrix input and CSV/JSON output with a provenance header."""

from __future__ import annotations

import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DegenerateInputError


def read_matrix(spec: str, n: int) -> np.ndarray:
    """``id`` or a whitespace/comma separated text file holding an n x n matrix."""
    if spec == "id":
        return np.eye(n)
    try:
        text = Path(spec).read_text()
    except OSError as exc:
        raise DegenerateInputError(f"cannot read matrix file {spec}: {exc}") from exc
    rows = [r.replace(",", " ").split() for r in text.splitlines() if r.strip() and not r.lstrip().startswith("#")]
    try:
        M = np.array([[float(x) for x in r] for r in rows])
    except ValueError as exc:
        raise DegenerateInputError(f"non-numeric entry in {spec}") from exc
    if M.shape != (n, n):
        raise DegenerateInputError(f"{spec} holds a {M.shape} matrix, expected {(n, n)}")
    return M


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if not np.isfinite(x) else f"{float(x):.17g}"
    return str(x)


def header_lines(config: dict) -> list:
    """Provenance lines; the timestamp line is last so payload diffs can skip it."""
    return [
        f"latorbit {__version__}",
        "config " + json.dumps(config, sort_keys=True, default=str),
        "timestamp " + datetime.now(timezone.utc).isoformat(timespec="seconds"),
    ]


def write_csv(path, columns, rows, config: dict) -> None:
    out = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        for line in header_lines(config):
            out.write("# " + line + "\r\n")
        w = csv.writer(out, lineterminator="\r\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(x) for x in r])
    finally:
        if out is not sys.stdout:
            out.close()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    return x


def write_json(path, payload: dict, config: dict) -> None:
    h = header_lines(config)
    doc = {"header": {"software": h[0], "config": config, "timestamp": h[2].split(" ", 1)[1]},
           "result": _jsonable(payload)}
    text = json.dumps(doc, indent=2, default=str) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
