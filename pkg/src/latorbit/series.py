"""Truncated norm series over SL(m, Z) with certified tails.

The series ``sum_q ||g1 q g2||^{-sigma}`` converges for ``sigma > m(m-1)``.
Truncation keeps ``||q|| <= N``.  The tail uses two facts: the
Hilbert-Schmidt norm is submultiplicative, and the count
``#{||q|| <= s} <= C s^{m(m-1)}`` holds with a constant fitted from exact
enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cache import cached_arrays
from .enumeration import count_sl, enumerate_sl
from .errors import DegenerateInputError, DivergentSeriesError

# radii used to fit the counting constant; m = 3 stays below the n = 3 cap
FIT_RADII = {2: (10, 20, 30, 40, 50, 60), 3: (5, 8, 11, 14)}
SAFETY = 2.0


@lru_cache(maxsize=None)
def counting_constant(m: int) -> float:
    """Safety-scaled ``max_s count(s) / s^{m(m-1)}`` over the fit radii."""
    if m not in FIT_RADII:
        raise ValueError(f"no counting fit for m={m}")
    radii = FIT_RADII[m]
    d = m * (m - 1)

    def build():
        return {"counts": np.array([count_sl(m, s) for s in radii], dtype=np.int64)}

    counts = cached_arrays(f"counts:{m}:{radii}", build)["counts"]
    return SAFETY * float(max(c / s**d for c, s in zip(counts, radii)))


@dataclass
class SeriesValue:
    value: float
    N: float
    tail_bound: float
    shells: list = field(default_factory=list)

    @property
    def relative_tail(self) -> float:
        return math.inf if self.value == 0 else self.tail_bound / self.value


def _check_pair(g1, g2):
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    if g1.shape != g2.shape or g1.ndim != 2 or g1.shape[0] != g1.shape[1]:
        raise DegenerateInputError("g1 and g2 must be square of equal size")
    for g in (g1, g2):
        if abs(np.linalg.det(g)) < 1e-12:
            raise DegenerateInputError("series arguments must be invertible")
    return g1, g2


def tail_bound(g1, g2, sigma: float, N: float) -> float:
    """Upper bound for ``sum_{||q|| > N} ||g1 q g2||^{-sigma}``."""
    g1, g2 = _check_pair(g1, g2)
    m = g1.shape[0]
    d = m * (m - 1)
    if sigma <= d:
        raise DivergentSeriesError(f"sigma={sigma} <= m(m-1)={d}")
    if N <= 0:
        return math.inf
    # ||q|| <= ||g1^{-1}||_op ||g1 q g2|| ||g2^{-1}||_op
    k = np.linalg.norm(np.linalg.inv(g1), 2) * np.linalg.norm(np.linalg.inv(g2), 2)
    C = counting_constant(m)
    return float(C * sigma / (sigma - d) * N ** (d - sigma) * k**sigma)


def norm_terms(g1, g2, N: float):
    """``(||q||^2, ||g1 q g2||)`` for every ``q`` with ``||q|| <= N``."""
    g1, g2 = _check_pair(g1, g2)
    m = g1.shape[0]
    if N < math.sqrt(m) * (1 - 1e-12):
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    Q = enumerate_sl(m, N)
    M = np.einsum("ij,kjl,lr->kir", g1, Q.astype(float), g2, optimize=True)
    return np.einsum("kij,kij->k", Q, Q), np.sqrt(np.einsum("kij,kij->k", M, M))


def series_sigma(g1, g2, sigma: float, N: float, with_shells: bool = False) -> SeriesValue:
    """Truncated ``sum_{||q|| <= N} ||g1 q g2||^{-sigma}`` with its tail bound.

    Parameters
    ----------
    g1, g2 : (m, m) invertible matrices
    sigma : exponent, must exceed m(m-1)
    N : truncation radius on ``||q||``
    with_shells : also return per-shell partial sums keyed by ``||q||^2``
    """
    g1, g2 = _check_pair(g1, g2)
    m = g1.shape[0]
    d = m * (m - 1)
    if sigma <= d:
        raise DivergentSeriesError(f"sigma={sigma} <= m(m-1)={d}")
    q2, nrm = norm_terms(g1, g2, N)
    if q2.size == 0:
        return SeriesValue(0.0, N, math.inf, [])
    terms = nrm ** (-float(sigma))
    shells = []
    if with_shells:
        keys, inv = np.unique(q2, return_inverse=True)
        sums = np.bincount(inv, weights=terms)
        shells = [(int(k), float(s)) for k, s in zip(keys, sums)]
    return SeriesValue(float(math.fsum(terms)), N, tail_bound(g1, g2, sigma, N), shells)


def phi_density(g0, eta, N: float) -> SeriesValue:
    """``Phi(eta) = sum_q ||g0^{-1} q eta||^{-m^2}`` truncated at ``||q|| <= N``."""
    g0 = np.asarray(g0, dtype=float)
    m = g0.shape[0]
    return series_sigma(np.linalg.inv(g0), eta, m * m, N)
