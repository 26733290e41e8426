"""Points of the moduli space of (lattice, normal direction) pairs.

A point is a unimodular rank-m lattice ``Lambda`` in R^{m+1} together with a
unit vector ``w`` orthogonal to it.  ``SL(m+1, R)`` acts on the right by

    (Lambda, w) . g = (Lambda g / cov(Lambda g)^{1/m}, w g^{-T} / ||w g^{-T}||)

and the base point is ``(span(e_1..e_m), e_{m+1})``, whose stabiliser is H.
Bases are stored oriented: ``det [B; w] > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .enumeration import cofactor_tally3, enumerate_sl
from .errors import DegenerateInputError, PreconditionError, ResourceLimitError
from .linalg import covolume, hs_norm_batch
from .reduction import gram_to_cholesky2, lagrange_gram, reduce_basis, successive_minima
from .series import phi_density

PERP_TOL = 1e-6
PER_RECORD_CAP = 6_000_000


@dataclass(frozen=True)
class ModuliPoint:
    basis: np.ndarray
    w: np.ndarray

    @property
    def m(self) -> int:
        return self.basis.shape[0]


def make_point(B, w) -> ModuliPoint:
    """Normalise a basis and direction into a moduli point.

    The basis is scaled to covolume one and its orientation fixed so that
    ``det [B; w] > 0`` (flipping the first row if needed, which keeps the
    lattice).  ``w`` must be orthogonal to the rows up to ``PERP_TOL``.
    """
    B = np.asarray(B, dtype=float)
    w = np.asarray(w, dtype=float).ravel()
    if B.ndim != 2 or B.shape[1] != B.shape[0] + 1 or w.size != B.shape[1]:
        raise DegenerateInputError("basis must be m x (m+1) and w of length m+1")
    cov = covolume(B)
    nw = np.linalg.norm(w)
    if nw == 0:
        raise DegenerateInputError("w must be nonzero")
    w = w / nw
    B = B / cov ** (1.0 / B.shape[0])
    off = np.abs(B @ w) / np.linalg.norm(B, axis=1)
    if np.max(off) > PERP_TOL:
        raise DegenerateInputError("w is not orthogonal to the lattice")
    # remove the residual component along w
    B = B - np.outer(B @ w, w)
    if np.linalg.det(np.vstack([B, w])) < 0:
        B = B.copy()
        B[0] = -B[0]
    return ModuliPoint(basis=B, w=w)


def base_point(m: int) -> ModuliPoint:
    B = np.eye(m, m + 1)
    w = np.zeros(m + 1)
    w[m] = 1.0
    return ModuliPoint(B, w)


def point_from_group(g) -> ModuliPoint:
    """``x0 . g`` for the base point ``x0``."""
    g = np.asarray(g, dtype=float)
    return act(base_point(g.shape[0] - 1), g)


def act(x: ModuliPoint, g) -> ModuliPoint:
    """Right action of ``g`` in SL(m+1, R)."""
    g = np.asarray(g, dtype=float)
    if g.shape != (x.m + 1, x.m + 1):
        raise DegenerateInputError("g has the wrong size")
    Bg = x.basis @ g
    wg = np.linalg.solve(g, x.w)
    return make_point(Bg, wg)


@dataclass(frozen=True)
class FiberCoords:
    w: np.ndarray
    rho: np.ndarray
    eta: np.ndarray
    eta_reduced: np.ndarray
    lambdas: np.ndarray
    reduced_basis: np.ndarray


def fiber_coords(x: ModuliPoint) -> FiberCoords:
    """Sphere coordinate and fiber representative of ``x``.

    ``rho`` is the rotation with ``w rho = e_{m+1}`` whose first m columns are
    the Gram-Schmidt frame of the basis, so ``B rho = [eta, 0]`` with ``eta``
    lower triangular.  ``eta_reduced`` is the Cholesky factor of the Gram
    matrix of the reduced basis and depends only on the lattice up to
    rotation.
    """
    m = x.m
    B = x.basis
    Qt, Rt = np.linalg.qr(B.T)
    s = np.sign(np.diag(Rt))
    Q = (Qt * s).T
    L = (Rt * s[:, None]).T
    K = np.vstack([Q, x.w])
    rho = K.T
    B_red, _ = reduce_basis(B)
    G = B_red @ B_red.T
    eta_red = np.linalg.cholesky(G)
    lam = successive_minima(B_red)
    return FiberCoords(w=x.w, rho=rho, eta=np.tril(L), eta_reduced=eta_red, lambdas=lam, reduced_basis=B_red)


def phi_weight(x0: ModuliPoint, x: ModuliPoint, N: float) -> float:
    """Fiber density ``Phi_{x0}`` at ``x`` (matrix route)."""
    g0 = fiber_coords(x0).eta
    eta = fiber_coords(x).eta_reduced
    return phi_density(g0, eta, N).value


def phi_weight_operator(x0: ModuliPoint, x: ModuliPoint, N: float) -> float:
    """Fiber density through operators between the lattices (second route).

    Sums ``||T_B o T_{B0}^{-1}||_HS^{-m^2}`` over the bases ``B = q B_red``
    with ``||q|| <= N``.  The operator sends ``b0_i`` to ``b_i`` and vanishes
    on the normal of ``Lambda0``; its matrix on row vectors is
    ``pinv(B0) B``.
    """
    m = x.m
    B0 = x0.basis
    P = np.linalg.pinv(B0)
    B_red = fiber_coords(x).reduced_basis
    Q = enumerate_sl(m, N).astype(float)
    M = np.einsum("ij,kjl,lr->kir", P, Q, B_red, optimize=True)
    return float(math.fsum(hs_norm_batch(M) ** (-float(m * m))))


# -------------------------------------------------------- empirical orbit


@dataclass
class EmpiricalMeasure:
    """Weighted records of the orbit ``x0 . Gamma_T``.

    ``weights[i]`` counts the lattice matrices mapping ``x0`` to record
    ``i``; without aggregation every weight is one.
    """

    T: float
    m: int
    gammas: np.ndarray
    weights: np.ndarray
    w: np.ndarray
    lambdas: np.ndarray
    eta: np.ndarray
    aggregated: bool
    meta: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return int(self.weights.sum())

    def n_eff(self) -> float:
        """Kish effective size ``(sum w)^2 / sum w^2``."""
        wt = self.weights.astype(float)
        return float(wt.sum() ** 2 / (wt * wt).sum())

    def mean(self, values: np.ndarray):
        """Weighted mean and its standard error from the Kish size."""
        wt = self.weights.astype(float)
        p = wt / wt.sum()
        mu = float(p @ values)
        var = float(p @ (values - mu) ** 2)
        return mu, math.sqrt(var / self.n_eff())


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
def _dot3(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@numba.njit(cache=True)
def _perp_basis(c):
    """Integral bases ``(b1, b2)`` of ``c^perp`` with ``b1 x b2 = c``."""
    K = c.shape[0]
    out = np.zeros((K, 2, 3), dtype=np.int64)
    for i in range(K):
        c0, c1, c2 = c[i, 0], c[i, 1], c[i, 2]
        g, x0, y0 = _egcd(c0, c1)
        if g == 0:
            if c2 > 0:
                out[i, 0, 0] = 1
                out[i, 1, 1] = 1
            else:
                out[i, 0, 1] = 1
                out[i, 1, 0] = 1
            continue
        out[i, 0, 0] = -c2 * x0
        out[i, 0, 1] = -c2 * y0
        out[i, 0, 2] = g
        out[i, 1, 0] = c1 // g
        out[i, 1, 1] = -c0 // g
    return out


@numba.njit(cache=True)
def _closest_completion(Bi, c):
    # shortest integral x with c . x = 1, searched around the Babai point
    K = c.shape[0]
    out = np.zeros((K, 3), dtype=np.int64)
    for i in range(K):
        g1, u1, w1 = _egcd(c[i, 0], c[i, 1])
        _, u2, w2 = _egcd(g1, c[i, 2])
        x0 = np.array([u2 * u1, u2 * w1, w2])
        b1 = Bi[i, 0]
        b2 = Bi[i, 1]
        s11 = float(_dot3(b1, b1))
        s12 = float(_dot3(b1, b2))
        s22 = float(_dot3(b2, b2))
        e1 = -float(_dot3(b1, x0))
        e2 = -float(_dot3(b2, x0))
        det = s11 * s22 - s12 * s12
        ca = np.rint((s22 * e1 - s12 * e2) / det)
        cb = np.rint((s11 * e2 - s12 * e1) / det)
        best = -1
        for da in range(-2, 3):
            for db in range(-2, 3):
                x = x0 + (int(ca) + da) * b1 + (int(cb) + db) * b2
                nx = _dot3(x, x)
                if best < 0 or nx < best:
                    best = nx
                    out[i] = x
    return out


def _features2(B: np.ndarray, W: np.ndarray):
    """Batched fiber features for rank two lattices in R^3.

    ``B`` holds oriented bases (any covolume), ``W`` the directions.
    """
    G = np.einsum("kij,klj->kil", B, B)
    cov = np.sqrt(np.linalg.det(G))
    G = G / cov[:, None, None]
    Gr, _ = lagrange_gram(G)
    eta = gram_to_cholesky2(Gr)
    lam = np.sqrt(np.stack([Gr[:, 0, 0], Gr[:, 1, 1]], axis=1))
    Wn = W / np.linalg.norm(W, axis=1)[:, None]
    return Wn, lam, eta


def _orbit_base_aggregated(T: float) -> EmpiricalMeasure:
    c, counts = cofactor_tally3(T)
    Bi = _perp_basis(c)
    _, U = lagrange_gram(np.einsum("kij,klj->kil", Bi, Bi).astype(float))
    Bi = np.einsum("kij,kjl->kil", U, Bi)
    W, lam, eta = _features2(Bi.astype(float), c.astype(float))
    x3 = _closest_completion(Bi, c)
    gam = np.concatenate([Bi, x3[:, None, :]], axis=1)
    return EmpiricalMeasure(T, 2, gam, counts, W, lam, eta, True, {"x0": "base"})


def orbit_empirical(x0: ModuliPoint, T: float, aggregate: bool | None = None) -> EmpiricalMeasure:
    """Empirical orbit measure of ``x0`` under ``{g in SL(m+1, Z) : ||g|| <= T}``.

    For the base point with ``m = 2`` the orbit point depends on ``g`` only
    through ``r1 x r2`` (the last column of ``g^{-1}``), so records are merged
    by that vector with integer weights.  Otherwise one record per matrix is
    produced, up to ``PER_RECORD_CAP`` records.
    """
    m = x0.m
    is_base = np.allclose(x0.basis, base_point(m).basis) and np.allclose(x0.w, base_point(m).w)
    if aggregate is None:
        aggregate = is_base and m == 2
    if aggregate:
        if not (is_base and m == 2):
            raise PreconditionError("aggregation is exact only for the base point with m = 2")
        return _orbit_base_aggregated(T)
    G = enumerate_sl(m + 1, T)
    if G.shape[0] > PER_RECORD_CAP:
        raise ResourceLimitError(f"{G.shape[0]} records exceed the per-record cap")
    Gf = G.astype(float)
    B = np.einsum("ij,kjl->kil", x0.basis, Gf)
    W = np.linalg.solve(Gf, np.broadcast_to(x0.w, (G.shape[0], m + 1))[..., None])[..., 0]
    if m == 2:
        W, lam, eta = _features2(B, W)
    else:
        lam = np.empty((G.shape[0], m))
        eta = np.empty((G.shape[0], m, m))
        for i in range(G.shape[0]):
            fc = fiber_coords(make_point(B[i], W[i]))
            lam[i], eta[i] = fc.lambdas, fc.eta_reduced
        W = W / np.linalg.norm(W, axis=1)[:, None]
    return EmpiricalMeasure(T, m, G, np.ones(G.shape[0], dtype=np.int64), W, lam, eta, False,
                            {"x0": "base" if is_base else "custom"})
