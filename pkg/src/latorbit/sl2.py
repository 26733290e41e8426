"""Finite-dimensional representations of SL(2, R) and the expansion checks.

The irreducible representation of highest weight n acts on binary forms of
degree n by ``(g f)(w) = f(w g)`` for a row vector ``w = (X, Y)``.  In the
basis ``v_i = X^{n-i} Y^i / (n-i)!``

* ``diag(s, 1/s)`` acts as ``diag(s^n, s^{n-2}, ..., s^{-n})``;
* ``[[1, 0], [-y, 1]]`` acts lower unitriangularly with entries
  ``(-y)^l / l!`` on the l-th subdiagonal.

With ``s = t^{1/m}`` these are ``rep_diag`` and ``rep_unip``.  The inner
product is the standard one on coordinates in this basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateInputError, PreconditionError
from .linalg import a_mat

Y_POINTS = 512
GRID_RTOL = 5e-3


@dataclass(frozen=True)
class IrrepSpec:
    n: int
    m: int = 2

    def __post_init__(self):
        if self.n < 1:
            raise PreconditionError("highest weight must be at least 1")
        if self.m < 1:
            raise PreconditionError("m must be positive")

    @property
    def dim(self) -> int:
        return self.n + 1


def rep_diag(spec: IrrepSpec, t: float) -> np.ndarray:
    if t <= 0:
        raise DegenerateInputError("t must be positive")
    e = (spec.n - 2 * np.arange(spec.dim)) / spec.m
    return np.diag(float(t) ** e)


def rep_unip(spec: IrrepSpec, y: float) -> np.ndarray:
    d = spec.dim
    i, j = np.indices((d, d))
    l = i - j
    band = np.array([(-y) ** k / math.factorial(k) for k in range(d)])
    return np.where(l >= 0, band[np.clip(l, 0, d - 1)], 0.0)


def rep_poly(n: int, g) -> np.ndarray:
    """Matrix of ``g`` in SL(2, R) acting on degree-n forms, basis ``v_i``.

    Built by expanding ``(a X + c Y)^{n-j} (b X + d Y)^j`` directly; used as
    the oracle for ``rep_diag`` and ``rep_unip``.
    """
    (a, b), (c, d) = np.asarray(g, dtype=float)
    P = np.polynomial.polynomial
    # polynomials in r = Y/X; coefficient k multiplies X^{n-k} Y^k
    out = np.zeros((n + 1, n + 1))
    for j in range(n + 1):
        f = P.polymul(P.polypow([a, c], n - j), P.polypow([b, d], j))
        f = np.pad(f, (0, n + 1 - len(f)))
        # f_k X^{n-k} Y^k = f_k (n-k)! v_k, and v_j carries 1/(n-j)!
        out[:, j] = [f[k] * math.factorial(n - k) / math.factorial(n - j) for k in range(n + 1)]
    return out


def proj_highest(spec: IrrepSpec, x) -> np.ndarray:
    """Coefficients (ascending in y) of the last coordinate of ``rep_unip(y) x``."""
    x = np.asarray(x, dtype=float)
    n = spec.n
    k = np.arange(n + 1)
    fact = np.array([math.factorial(i) for i in k], dtype=float)
    return (-1.0) ** k / fact * x[..., n - k]


def _horner_sup(coef, lo, hi, points):
    s = np.linspace(0.0, 1.0, points)
    y = lo[..., None] + (hi - lo)[..., None] * s
    val = np.zeros(np.broadcast_shapes(coef.shape[:-1] + (1,), y.shape))
    for k in range(coef.shape[-1] - 1, -1, -1):
        val = val * y + coef[..., k, None]
    return np.abs(val).max(axis=-1)


def _sup_refined(coef, lo, hi):
    pts = Y_POINTS
    cur = _horner_sup(coef, lo, hi, pts)
    while True:
        pts = 2 * pts - 1
        nxt = _horner_sup(coef, lo, hi, pts)
        if np.all(np.abs(nxt - cur) <= GRID_RTOL * np.abs(nxt)) or pts > 1 << 16:
            return nxt
        cur = nxt


def _l2_frame(spec: IrrepSpec, lo: float, hi: float):
    # Gram matrix of x -> p_x in L2[lo, hi]; its eigenbasis whitens the problem
    n = spec.n
    k = np.arange(n + 1)
    e = k[:, None] + k[None, :] + 1
    H = (hi**e - lo**e) / e / (hi - lo)
    L = np.diag((-1.0) ** k / np.array([math.factorial(i) for i in k], dtype=float))[:, ::-1]
    w, V = np.linalg.eigh(L.T @ H @ L)
    return V / np.sqrt(np.maximum(w, 1e-300))


def _min_sup_at(spec, beta, tau, X0, polish):
    lo = np.array([tau])
    hi = lo + beta

    def f(X):
        X = np.atleast_2d(X)
        coef = proj_highest(spec, X)
        return _horner_sup(coef, lo, hi, Y_POINTS) / np.linalg.norm(X, axis=-1)

    W = _l2_frame(spec, tau, tau + beta)
    # starts: the L2 minimiser and the best random directions
    starts = [W[:, 0]] + list(X0[np.argsort(f(X0))[: polish - 1]])
    out = []
    for x in starts:
        z0 = np.linalg.solve(W, x)
        z0 /= np.linalg.norm(z0)
        for _ in range(3):
            res = minimize(lambda z: float(f(W @ z)[0]), z0, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
            z0 = res.x / np.linalg.norm(res.x)
        x = W @ z0
        out.append(x / np.linalg.norm(x))
    return out


def expansion_constant(spec: IrrepSpec, beta: float, tau_interval=(0.0, 0.0), trials: int = 1000,
                       seed: int = 0, tau_points: int = 9, polish: int = 4) -> float:
    """Estimate ``min_x min_tau sup_{y in [tau, tau + beta]} |p_x(y)| / beta^n``.

    For each tau the minimiser of the L2 norm of ``p_x`` on the interval and
    the best random unit vectors start Nelder-Mead runs in whitened
    coordinates.  The winners are re-evaluated on a y-grid refined until it
    is stable.
    """
    if not 0 < beta <= 1:
        raise PreconditionError("beta must lie in (0, 1]")
    if trials < 1000:
        raise PreconditionError("expansion_constant needs at least 1000 trials")
    lo, hi = tau_interval
    taus = np.linspace(lo, hi, tau_points) if hi > lo else np.array([float(lo)])
    rng = np.random.default_rng(seed)
    X0 = rng.standard_normal((trials, spec.dim))
    X0 /= np.linalg.norm(X0, axis=1, keepdims=True)
    best = math.inf
    for tau in taus:
        C = np.array(_min_sup_at(spec, beta, tau, X0, polish))
        coef = proj_highest(spec, C)
        sup = _sup_refined(coef, np.full(len(C), tau), np.full(len(C), tau + beta))
        best = min(best, float(sup.min()))
    return best / beta**spec.n


def expansion_ratio(spec: IrrepSpec, t: float, chi: float, x, tau: float = 0.0) -> float:
    """``sup_y ||rep_diag(t) rep_unip(y) x|| / (t^{-chi/m} ||x||)`` over ``y in [tau, tau + t^{(1-chi)/m}]``."""
    x = np.asarray(x, dtype=float)
    beta = t ** ((1 - chi) / spec.m)
    D = rep_diag(spec, t)
    best = 0.0
    pts = Y_POINTS
    while True:
        ys = np.linspace(tau, tau + beta, pts)
        vals = np.array([np.linalg.norm(D @ rep_unip(spec, y) @ x) for y in ys])
        cur = vals.max()
        if abs(cur - best) <= GRID_RTOL * cur:
            break
        best = cur
        pts = 2 * pts - 1
    return float(cur / (t ** (-chi / spec.m) * np.linalg.norm(x)))


# ---------------------------------------------------------------- in SL(m+1)


def embed_sl2(j: int, m: int, M) -> np.ndarray:
    """j-th copy of SL(2, R) in SL(m+1, R) on coordinates ``(j, m+1)`` (1-based).

    ``[[a, b], [c, d]]`` goes to ``a`` at (j, j), ``b`` at (j, m+1), ``c``
    at (m+1, j) and ``d`` at (m+1, m+1), which makes the map a homomorphism.
    """
    if not 1 <= j <= m:
        raise PreconditionError(f"j must lie in 1..{m}")
    M = np.asarray(M, dtype=float)
    g = np.eye(m + 1)
    jj = j - 1
    g[jj, jj], g[jj, m] = M[0]
    g[m, jj], g[m, m] = M[1]
    return g


def factorize_va(m: int, t: float, v, sigma=None) -> list:
    """Factors of ``a_t^{-1} u_v^{-1}`` as embedded SL(2) elements in the order ``sigma``."""
    if t <= 0:
        raise DegenerateInputError("t must be positive")
    v = np.asarray(v, dtype=float).ravel()
    sigma = list(range(1, m + 1)) if sigma is None else [int(s) for s in sigma]
    if sorted(sigma) != list(range(1, m + 1)):
        raise PreconditionError("sigma must be a permutation of 1..m")
    s = t ** (1.0 / m)
    out = []
    for j, sj in enumerate(sigma, start=1):
        lower = np.array([[1.0, 0.0], [-(t ** (-(m - j) / m)) * v[sj - 1], 1.0]])
        out.append(embed_sl2(sj, m, np.diag([s, 1 / s]) @ lower))
    return out


def _sl_basis(n: int) -> np.ndarray:
    # E_ij (i != j) and E_ii - E_{i+1,i+1}
    B = []
    for i in range(n):
        for j in range(n):
            if i != j:
                E = np.zeros((n, n))
                E[i, j] = 1
                B.append(E)
    for i in range(n - 1):
        E = np.zeros((n, n))
        E[i, i], E[i + 1, i + 1] = 1, -1
        B.append(E)
    return np.array(B)


def adjoint_matrix(g) -> np.ndarray:
    """Matrix of ``X -> g X g^{-1}`` on sl(n) in the basis of ``_sl_basis``."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    B = _sl_basis(n)
    flat = B.reshape(len(B), -1).T
    img = np.einsum("ij,kjl,lr->kir", g, B, np.linalg.inv(g)).reshape(len(B), -1).T
    return np.linalg.lstsq(flat, img, rcond=None)[0]


def joint_fixed_dimension(m: int = 2, tol: float = 1e-10) -> int:
    """Dimension of the sl(m+1) vectors fixed by every embedded SL(2) copy (adjoint)."""
    n = m + 1
    B = _sl_basis(n)
    flat = B.reshape(len(B), -1).T
    rows = []
    for j in range(1, m + 1):
        for gen in ([[0, 1], [0, 0]], [[0, 0], [1, 0]], [[1, 0], [0, -1]]):
            Z = embed_sl2(j, m, np.eye(2) + np.array(gen, dtype=float)) - np.eye(n)
            # derivative of the adjoint action: ad Z = [Z, .]
            img = np.einsum("ij,kjl->kil", Z, B) - np.einsum("kij,jl->kil", B, Z)
            rows.append(np.linalg.lstsq(flat, img.reshape(len(B), -1).T, rcond=None)[0])
    K = np.vstack(rows)
    sv = np.linalg.svd(K, compute_uv=False)
    return int(np.sum(sv <= tol * max(sv[0], 1.0))) + (K.shape[1] - len(sv))


@dataclass
class ExpansionRow:
    t: float
    radius: float
    min_sup: float
    grid: int


def _sup_norms(rep: str, d: np.ndarray, X: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``max_p ||a u_{-w_p} . x_c||`` for ``a = diag(d)``; X is (c, ...) and W is (c, P, m)."""
    c, P, m = W.shape
    n = m + 1
    w = np.zeros((c, P, n))
    w[..., :m] = W
    if rep == "standard":
        Z = np.broadcast_to(X[:, None, :], (c, P, n)).copy()
        Z[..., m] -= np.einsum("cpj,cj->cp", w, X)
        Z *= d
        return np.sqrt(np.einsum("cpi,cpi->cp", Z, Z)).max(axis=1)
    # u_{-w} Y u_w = Y - E (w Y) + (Y E) w - E (w Y E) w with E the last unit column
    wY = np.einsum("cpj,cjk->cpk", w, X)
    YE = X[:, :, m]
    wYE = np.einsum("cpj,cj->cp", w, YE)
    Z = np.broadcast_to(X[:, None], (c, P, n, n)).copy()
    Z += YE[:, None, :, None] * w[:, :, None, :]
    Z[:, :, m, :] -= wY + wYE[..., None] * w
    Z *= d[:, None] / d[None, :]
    return np.sqrt(np.einsum("cpij,cpij->cp", Z, Z)).max(axis=1)


def _random_vectors(rep: str, n: int, count: int, r: float, rng) -> np.ndarray:
    # neither representation has nonzero G-fixed vectors, so the non-fixed part is all of x
    if rep == "standard":
        X = rng.standard_normal((count, n))
        return r * X / np.linalg.norm(X, axis=1, keepdims=True)
    B = _sl_basis(n)
    c = rng.standard_normal((count, len(B)))
    X = np.einsum("ck,kij->cij", c, B)
    return r * X / np.sqrt(np.einsum("cij,cij->c", X, X))[:, None, None]


def _disc_grid(m: int, radius: float, per_axis: int) -> np.ndarray:
    s = np.linspace(-radius, radius, per_axis)
    P = np.stack(np.meshgrid(*([s] * m), indexing="ij"), axis=-1).reshape(-1, m)
    return P[np.einsum("ij,ij->i", P, P) <= radius * radius * (1 + 1e-12)]


def expansion_check_G(rep: str, g0, t_list, chi: float = 0.5, r: float = 1.0, trials: int = 2000,
                      seed: int = 0, xi_radius: float = 1.0, start_points: int = 33,
                      max_points: int = 129) -> list:
    """Min over random ``(x, xi)`` of ``sup_v ||a_t^{-1} u_v^{-1} g0 . x||``.

    ``v`` ranges over a grid in the ball of radius ``t^{(1-chi)/m}`` about
    ``xi``; ``xi`` is uniform in the ball of radius ``xi_radius``.  The
    per-axis grid starts at ``start_points`` and doubles until the minimum
    moves by less than half a percent.
    """
    if rep not in ("standard", "adjoint"):
        raise PreconditionError("rep must be 'standard' or 'adjoint'")
    if not 0 < chi < 1 or r <= 0:
        raise PreconditionError("need 0 < chi < 1 and r > 0")
    g0 = np.asarray(g0, dtype=float)
    n = g0.shape[0]
    m = n - 1
    dim = n if rep == "standard" else n * n - 1
    if dim > 24:
        raise PreconditionError("representation dimension exceeds 24")
    t_list = [float(t) for t in t_list]
    if any(b >= a for a, b in zip(t_list, t_list[1:])) or min(t_list) <= 0:
        raise PreconditionError("t_list must be positive and strictly decreasing")
    rng = np.random.default_rng(seed)
    X = _random_vectors(rep, n, trials, r, rng)
    X = X @ g0.T if rep == "standard" else np.einsum("ij,cjk,kl->cil", g0, X, np.linalg.inv(g0))
    xi = rng.standard_normal((trials, m))
    xi *= (xi_radius * rng.random(trials) ** (1 / m) / np.linalg.norm(xi, axis=1))[:, None]
    rows = []
    for t in t_list:
        radius = t ** ((1 - chi) / m)
        d = np.diag(np.linalg.inv(a_mat(m, t)))
        pts = start_points
        prev = None
        while True:
            V = _disc_grid(m, radius, pts)
            chunk = max(1, 2_000_000 // (len(V) * dim))
            sup = np.concatenate([_sup_norms(rep, d, X[i:i + chunk], xi[i:i + chunk, None, :] + V[None])
                                  for i in range(0, trials, chunk)])
            cur = float(sup.min())
            if prev is not None and abs(cur - prev) <= GRID_RTOL * cur or 2 * pts - 1 > max_points:
                break
            prev = cur
            pts = 2 * pts - 1
        rows.append(ExpansionRow(t, radius, cur, pts))
    return rows
