"""Enumeration of SL(n, Z) inside Hilbert-Schmidt balls.

Rows are chosen depth first with a running norm budget.  Once the first
n-1 rows are fixed the last row ``x`` must solve ``c . x = 1`` where ``c`` is
the cofactor vector of those rows; when ``c`` is primitive the solutions form
the coset ``x0 + span_Z(rows)``, so the last step is a Fincke-Pohst walk in
dimension n-1 around a particular solution.

Two independent routes are provided.  ``n = 2, 3`` run compiled kernels;
``_enumerate_generic`` is plain Python for any n and doubles as the n = 4
path and as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

from .errors import PreconditionError, ResourceLimitError

T_CAPS = {2: 200.0, 3: 30.0, 4: 8.0}

# decimal renderings of sqrt(k) (e.g. 1.7320508) must still include shell k
_RADIUS_SLACK = 1e-7


def norm2_budget(T: float) -> int:
    """Largest integer squared norm admitted by the radius ``T``."""
    if not T > 0:
        raise ValueError("T must be positive")
    return int(math.floor(T * T * (1.0 + _RADIUS_SLACK)))


def _check(n: int, T: float) -> int:
    if n not in T_CAPS:
        raise ValueError(f"unsupported dimension n={n}; expected 2, 3 or 4")
    N2 = norm2_budget(T)
    if T > T_CAPS[n]:
        raise ResourceLimitError(f"T={T} exceeds the cap {T_CAPS[n]} for n={n}")
    return N2


def ball_vectors(n: int, N2: int) -> np.ndarray:
    """Integer vectors of squared norm at most ``N2``, lexicographic order."""
    r = int(math.isqrt(N2))
    axes = np.arange(-r, r + 1, dtype=np.int64)
    grid = np.stack(np.meshgrid(*([axes] * n), indexing="ij"), axis=-1).reshape(-1, n)
    keep = (grid * grid).sum(axis=1) <= N2
    return np.ascontiguousarray(grid[keep])


# ---------------------------------------------------------------- kernels


@numba.njit(cache=True)
def _egcd(a, b):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b != 0:
        qq = a // b
        a, b = b, a - qq * b
        x0, x1 = x1, x0 - qq * x1
        y0, y1 = y1, y0 - qq * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


@numba.njit(cache=True)
def _kernel2(V, N2, out, fill):
    # rows (a, b); cofactor of the last row is (-b, a)
    cnt = 0
    for i in range(V.shape[0]):
        a = V[i, 0]
        b = V[i, 1]
        s1 = a * a + b * b
        if s1 == 0 or s1 > N2 - 1:
            continue
        c0 = -b
        c1 = a
        g, u, w = _egcd(c0, c1)
        if g != 1:
            continue
        x0 = u
        y0 = w
        rem = N2 - s1
        # x = (x0, y0) + k (a, b)
        kc = -(x0 * a + y0 * b) / s1
        span = math.sqrt(rem / s1) + 1.0
        klo = int(math.floor(kc - span))
        khi = int(math.ceil(kc + span))
        for k in range(klo, khi + 1):
            x = x0 + k * a
            y = y0 + k * b
            if x * x + y * y <= rem:
                if fill:
                    out[cnt, 0] = a
                    out[cnt, 1] = b
                    out[cnt, 2] = x
                    out[cnt, 3] = y
                cnt += 1
    return cnt


@numba.njit(cache=True)
def _kernel3(V, norms, N2, out, fill, acc, off):
    # V sorted by squared norm; rows r1, r2, then the 2D coset walk for r3.
    # fill: 0 count only, 1 write matrices, 2 tally by cofactor c = r1 x r2
    cnt = 0
    nv = V.shape[0]
    for i in range(nv):
        s1 = norms[i]
        if s1 > N2 - 2:
            break
        if s1 == 0:
            continue
        a0 = V[i, 0]
        a1 = V[i, 1]
        a2 = V[i, 2]
        g, _, _ = _egcd(a0, a1)
        g, _, _ = _egcd(g, a2)
        if g != 1:
            continue
        for j in range(nv):
            s2 = norms[j]
            if s2 > N2 - s1 - 1:
                break
            if s2 == 0:
                continue
            b0 = V[j, 0]
            b1 = V[j, 1]
            b2 = V[j, 2]
            c0 = a1 * b2 - a2 * b1
            c1 = a2 * b0 - a0 * b2
            c2 = a0 * b1 - a1 * b0
            g1, u1, w1 = _egcd(c0, c1)
            g, u2, w2 = _egcd(g1, c2)
            if g != 1:
                continue
            x0 = u2 * u1
            x1 = u2 * w1
            x2 = w2
            rem = N2 - s1 - s2
            cc = c0 * c0 + c1 * c1 + c2 * c2
            remp = rem - 1.0 / cc
            if remp < 0:
                continue
            p = a0 * b0 + a1 * b1 + a2 * b2
            det = s1 * s2 - p * p
            e1 = a0 * x0 + a1 * x1 + a2 * x2
            e2 = b0 * x0 + b1 * x1 + b2 * x2
            # coefficients of the in-plane part of x0
            al = (s2 * e1 - p * e2) / det
            be = (s1 * e2 - p * e1) / det
            # |be + bb| <= sqrt(remp s1 / det), so bb is centred at -be
            wspan = math.sqrt(remp * s1 / det) + 1.0
            blo = int(math.floor(-be - wspan))
            bhi = int(math.ceil(-be + wspan))
            for bb in range(blo, bhi + 1):
                wv = be + bb
                q = remp - det * wv * wv / s1
                if q < -1.0:
                    continue
                uc = -p * wv / s1
                us = math.sqrt(max(q, 0.0) / s1) + 1.0
                alo = int(math.floor(uc - us - al))
                ahi = int(math.ceil(uc + us - al))
                for aa in range(alo, ahi + 1):
                    y0 = x0 + aa * a0 + bb * b0
                    y1 = x1 + aa * a1 + bb * b1
                    y2 = x2 + aa * a2 + bb * b2
                    if y0 * y0 + y1 * y1 + y2 * y2 <= rem:
                        if fill == 2:
                            acc[c0 + off, c1 + off, c2 + off] += 1
                        elif fill == 1:
                            out[cnt, 0] = a0
                            out[cnt, 1] = a1
                            out[cnt, 2] = a2
                            out[cnt, 3] = b0
                            out[cnt, 4] = b1
                            out[cnt, 5] = b2
                            out[cnt, 6] = y0
                            out[cnt, 7] = y1
                            out[cnt, 8] = y2
                        cnt += 1
    return cnt


def _by_norm(V):
    nrm = (V * V).sum(axis=1)
    order = np.argsort(nrm, kind="stable")
    return np.ascontiguousarray(V[order]), np.ascontiguousarray(nrm[order])


def _run_kernel(n, N2, fill):
    if n == 2:
        V = ball_vectors(2, N2)
        cnt = _kernel2(V, N2, np.zeros((1, 4), np.int64), False)
        if not fill:
            return cnt
        out = np.empty((cnt, 4), np.int64)
        _kernel2(V, N2, out, True)
        return out
    V, nrm = _by_norm(ball_vectors(3, N2))
    acc = np.zeros((1, 1, 1), np.int64)
    cnt = _kernel3(V, nrm, N2, np.zeros((1, 9), np.int64), 0, acc, 0)
    if not fill:
        return cnt
    out = np.empty((cnt, 9), np.int64)
    _kernel3(V, nrm, N2, out, 1, acc, 0)
    return out


# ------------------------------------------------------------- generic route


def _cofactor_row(rows: np.ndarray) -> np.ndarray:
    # c with det([rows; x]) = c . x
    k, n = rows.shape
    c = np.empty(n, dtype=object)
    R = [[int(v) for v in r] for r in rows]
    for j in range(n):
        minor = [[r[i] for i in range(n) if i != j] for r in R]
        c[j] = (-1) ** (n - 1 + j) * _int_det(minor)
    return c


def _int_det(M) -> int:
    n = len(M)
    if n == 0:
        return 1
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    return sum(
        (-1) ** j * M[0][j] * _int_det([r[:j] + r[j + 1 :] for r in M[1:]])
        for j in range(n)
    )


def _solve_unit(c) -> list | None:
    # particular integer solution of c . x = 1
    n = len(c)
    g, coef = int(c[0]), [1] + [0] * (n - 1)
    for j in range(1, n):
        g2, u, w = _py_egcd(g, int(c[j]))
        coef = [u * x for x in coef]
        coef[j] = w
        g = g2
    if g != 1:
        return None
    return coef


def _py_egcd(a, b):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        qq = a // b
        a, b = b, a - qq * b
        x0, x1 = x1, x0 - qq * x1
        y0, y1 = y1, y0 - qq * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


def _coset_points(rows: np.ndarray, x0: np.ndarray, rem: int) -> list:
    """Points of ``x0 + span_Z(rows)`` with squared norm at most ``rem``."""
    k = rows.shape[0]
    B = rows.astype(float)
    G = B @ B.T
    Lc = np.linalg.cholesky(G)  # G = Lc Lc^T
    center = -np.linalg.solve(G, B @ x0.astype(float))
    perp2 = float(x0 @ x0) - float(-center @ (B @ x0.astype(float)))
    budget = rem - perp2 + 1e-9
    found = []
    if budget < -1e-9:
        return found
    # Fincke-Pohst on coefficients a with (a - center)^T G (a - center) <= budget
    Rm = Lc.T  # upper triangular, G = Rm^T Rm

    def rec(level, partial_a, partial_cost):
        # level runs k-1 .. 0; Rm upper so row i involves a_i..a_{k-1}
        i = level
        off = sum(Rm[i, j] * (partial_a[j] - center[j]) for j in range(i + 1, k))
        d = Rm[i, i]
        room = budget - partial_cost
        if room < 0:
            return
        span = math.sqrt(room) / d
        mid = center[i] - off / d
        for ai in range(math.floor(mid - span) - 1, math.ceil(mid + span) + 2):
            val = d * (ai - center[i]) + off
            cost = partial_cost + val * val
            if cost > budget + 1e-6:
                continue
            partial_a[i] = ai
            if i == 0:
                x = x0 + np.array(partial_a, dtype=np.int64) @ rows
                if int(x @ x) <= rem:
                    found.append(x)
            else:
                rec(i - 1, partial_a, cost)

    rec(k - 1, [0] * k, 0.0)
    return found


def _primitive_rows(rows: np.ndarray) -> bool:
    # the gcd of maximal minors must be one for the rows to extend to SL(n, Z)
    k, n = rows.shape
    from itertools import combinations

    g = 0
    R = [[int(v) for v in r] for r in rows]
    for cols in combinations(range(n), k):
        g = math.gcd(g, _int_det([[r[c] for c in cols] for r in R]))
        if g == 1:
            return True
    return g == 1


def _enumerate_generic(n: int, N2: int) -> np.ndarray:
    V = ball_vectors(n, N2)
    nrm = (V * V).sum(axis=1)
    out = []

    def rec(rows, used):
        depth = len(rows)
        if depth == n - 1:
            R = np.array(rows, dtype=np.int64)
            c = _cofactor_row(R)
            x0 = _solve_unit(c)
            if x0 is None:
                return
            for x in _coset_points(R, np.array(x0, dtype=np.int64), N2 - used):
                out.append(np.concatenate([R.ravel(), x]))
            return
        left = n - depth - 1  # rows still to place after this one
        for idx in range(V.shape[0]):
            s = int(nrm[idx])
            if s == 0 or used + s > N2 - left:
                continue
            cand = rows + [V[idx]]
            if not _primitive_rows(np.array(cand)):
                continue
            rec(cand, used + s)

    rec([], 0)
    if not out:
        return np.zeros((0, n, n), dtype=np.int64)
    return np.array(out, dtype=np.int64).reshape(-1, n, n)


# ---------------------------------------------------------------- public API


def _lex_sort(M: np.ndarray) -> np.ndarray:
    if len(M) == 0:
        return M
    flat = M.reshape(M.shape[0], -1)
    order = np.lexsort(flat.T[::-1])
    return M[order]


@lru_cache(maxsize=16)
def _enumerate_cached(n: int, N2: int) -> np.ndarray:
    if n in (2, 3):
        M = _run_kernel(n, N2, True).reshape(-1, n, n)
    else:
        M = _enumerate_generic(n, N2)
    M = _lex_sort(M)
    M.setflags(write=False)
    return M


def enumerate_sl(n: int, T: float) -> np.ndarray:
    """All ``g`` in SL(n, Z) with ``||g|| <= T``, lexicographic by rows.

    Returns an integer array of shape ``(K, n, n)``.
    """
    N2 = _check(n, T)
    return _enumerate_cached(n, N2)


def enumerate_sl_generic(n: int, T: float) -> np.ndarray:
    """Pure-Python route, same contract as :func:`enumerate_sl`."""
    N2 = _check(n, T)
    return _lex_sort(_enumerate_generic(n, N2))


def stream_sl(n: int, T: float):
    """Yield the enumeration in first-row blocks, preserving global order."""
    M = enumerate_sl(n, T)
    if M.shape[0] == 0:
        return
    first = M[:, 0, :]
    cuts = np.flatnonzero(np.any(first[1:] != first[:-1], axis=1)) + 1
    yield from np.split(M, cuts)


def count_sl(n: int, T: float) -> int:
    """``#{g in SL(n, Z) : ||g|| <= T}``."""
    N2 = _check(n, T)
    if n in (2, 3):
        return int(_run_kernel(n, N2, False))
    return int(_enumerate_cached(n, N2).shape[0])


def cofactor_tally3(T: float):
    """Group SL(3, Z)_T by the last column of the inverse.

    That column is ``c = r1 x r2`` (cross product of the first two rows).
    Returns ``(c, counts)`` with ``c`` of shape ``(K, 3)`` in lexicographic
    order and ``counts[i] = #{g : ||g|| <= T, r1 x r2 = c[i]}``.
    """
    N2 = _check(3, T)
    V, nrm = _by_norm(ball_vectors(3, N2))
    # |r1 x r2| <= |r1||r2| <= N2 / 2
    off = N2 // 2 + 1
    acc = np.zeros((2 * off + 1,) * 3, np.int64)
    _kernel3(V, nrm, N2, np.zeros((1, 9), np.int64), 2, acc, off)
    idx = np.argwhere(acc > 0)
    return (idx - off).astype(np.int64), acc[tuple(idx.T)]


@dataclass(frozen=True)
class GrowthFit:
    exponent: float
    constant: float
    residual: float


def growth_fit(n: int, T_list) -> GrowthFit:
    """Least-squares fit of ``log count = log C + e log T``."""
    T = np.asarray(sorted(T_list), dtype=float)
    if T.size < 4:
        raise PreconditionError("growth_fit needs at least four radii")
    counts = np.array([count_sl(n, t) for t in T], dtype=float)
    if counts[0] < 100:
        raise PreconditionError("smallest radius yields fewer than 100 points")
    if np.all(counts == counts[0]):
        raise PreconditionError("counts do not vary over the radii")
    X = np.column_stack([np.ones_like(T), np.log(T)])
    coef, res, *_ = np.linalg.lstsq(X, np.log(counts), rcond=None)
    resid = float(np.sqrt(res[0] / T.size)) if res.size else 0.0
    return GrowthFit(exponent=float(coef[1]), constant=float(np.exp(coef[0])), residual=resid)
