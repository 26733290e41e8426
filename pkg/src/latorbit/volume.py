"""Haar volume of skew balls in H.

For ``g1, g2`` in SL(m+1, R) and a radius ``T`` the skew ball is the set of
``h`` in H with ``||g1^{-1} h g2|| <= T``.  Splitting ``h = u_v a_t q~`` turns
each ``q``-component into an integral over ``t`` of ellipsoid volumes in
``v``.  The ellipsoid at height ``t`` has squared radius ``R(t)``, a
polynomial in ``t^{1/m}``.  Writing ``A = ||A1 q A2||`` and
``c = det(A1 A2)^{-1}``:

    R(t) = -c^2 t^{2/m+2} + T^2 t^{2/m} - A^2

Here ``(A1, v1)`` and ``(A2, v2)`` are the lower-block data of ``g1^{-1}``
and ``g2`` (see :func:`latorbit.linalg.skew_blocks`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ellipe, gammaln

from .enumeration import enumerate_sl
from .errors import DegenerateInputError, NoComponentError, NumericFailureError, PreconditionError
from .linalg import a_mat, embed_block, hs_norm_batch, skew_blocks, u_mat
from .quadrature import tanh_sinh
from .series import series_sigma, tail_bound

SHIFT_CONSTANT = 2.0


def unit_ball_volume(m: int) -> float:
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


def beta_constant(m: int) -> float:
    """``m pi^{m/2} Gamma(m^2/2) / (2 Gamma(m^2/2 + m/2 + 1))``."""
    return m * math.pi ** (m / 2) / 2 * math.exp(gammaln(m * m / 2) - gammaln(m * m / 2 + m / 2 + 1))


@dataclass
class SkewBallSpec:
    m: int
    T: float
    g1: np.ndarray
    g2: np.ndarray
    q: np.ndarray | None = None
    A1: np.ndarray = field(init=False, repr=False)
    v1: np.ndarray = field(init=False, repr=False)
    A2: np.ndarray = field(init=False, repr=False)
    v2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.T > 0:
            raise PreconditionError("T must be positive")
        self.g1 = np.asarray(self.g1, dtype=float)
        self.g2 = np.asarray(self.g2, dtype=float)
        if self.g1.shape != (self.m + 1, self.m + 1) or self.g2.shape != self.g1.shape:
            raise DegenerateInputError("g1, g2 must be (m+1) x (m+1)")
        self.A1, self.v1, self.A2, self.v2 = skew_blocks(self.g1, self.g2)
        if self.q is not None:
            self.q = np.asarray(self.q, dtype=np.int64)
            if self.q.shape != (self.m, self.m) or round(np.linalg.det(self.q)) != 1:
                raise DegenerateInputError("q must lie in SL(m, Z)")

    def with_q(self, q) -> "SkewBallSpec":
        return SkewBallSpec(self.m, self.T, self.g1, self.g2, q)

    def with_T(self, T) -> "SkewBallSpec":
        return SkewBallSpec(self.m, T, self.g1, self.g2, self.q)

    @property
    def corner(self) -> float:
        # c = det(A1 A2)^{-1}
        return 1.0 / (np.linalg.det(self.A1) * np.linalg.det(self.A2))

    @property
    def det_ratio(self) -> float:
        """``|det(A1)^m / det(A2)|``."""
        return abs(np.linalg.det(self.A1) ** self.m / np.linalg.det(self.A2))

    def a_norm(self, q=None) -> float:
        q = self.q if q is None else q
        if q is None:
            raise PreconditionError("this operation needs a fixed q")
        return float(np.linalg.norm(self.A1 @ q @ self.A2))


def radius_poly(spec: SkewBallSpec, t):
    """Squared radius ``R(t)`` of the ellipsoid slice at height ``t``."""
    m = spec.m
    t = np.asarray(t, dtype=float)
    A = spec.a_norm()
    c = spec.corner
    return -(c * c) * t ** (2.0 / m + 2) + t ** (2.0 / m) * spec.T**2 - A * A


def critical_data(spec: SkewBallSpec):
    """``(M_T, theta_T)``: maximum of ``R + A^2`` and where it is attained."""
    m = spec.m
    c = abs(spec.corner)
    T = spec.T
    theta = T / (math.sqrt(m + 1) * c)
    M = m / (m + 1) * (1.0 / (m + 1)) ** (1.0 / m) * T ** (2 + 2.0 / m) / c ** (2.0 / m)
    return M, theta


@dataclass(frozen=True)
class RootPair:
    alpha: float
    beta: float
    theta: float
    # alpha^{2/m} - A^2/T^2, evaluated without cancellation through R(alpha) = 0
    alpha_excess: float


def _newton(f, df, x, lo, hi, rtol=1e-15, iters=60):
    for _ in range(iters):
        fx = f(x)
        d = df(x)
        if d == 0:
            break
        x_new = x - fx / d
        if not lo <= x_new <= hi:
            x_new = 0.5 * (x + (lo if x_new < lo else hi))
        if abs(x_new - x) <= rtol * abs(x):
            return x_new
        x = x_new
    return x


def _log_bisect(f, lo, hi, rel=1e-9):
    flo = f(lo)
    for _ in range(400):
        mid = math.sqrt(lo * hi)
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi / lo - 1 < rel:
            break
    return lo, hi


def roots(spec: SkewBallSpec) -> RootPair:
    """Positive roots ``alpha < theta < beta`` of ``R``.

    Bracketing by geometric bisection on ``(0, theta)`` and
    ``(theta, sqrt(m+1) theta)``, then Newton polishing.

    Raises
    ------
    NoComponentError
        If ``A^2 >= M_T`` so that ``R`` never becomes positive.
    """
    m = spec.m
    T = spec.T
    A = spec.a_norm()
    c2 = spec.corner**2
    M, theta = critical_data(spec)
    if A * A >= M:
        raise NoComponentError(f"||A1 q A2||^2 = {A * A:.6g} >= M_T = {M:.6g}")

    def R(t):
        return -c2 * t ** (2.0 / m + 2) + t ** (2.0 / m) * T * T - A * A

    def dR(t):
        return -c2 * (2.0 / m + 2) * t ** (2.0 / m + 1) + (2.0 / m) * t ** (2.0 / m - 1) * T * T

    # alpha lies above the zero of T^2 t^{2/m} - A^2
    lo = (A / T) ** m * (1 - 1e-12)
    lo_a, hi_a = _log_bisect(R, max(lo, 1e-300), theta)
    alpha = _newton(R, dR, 0.5 * (lo_a + hi_a), lo_a, hi_a)
    lo_b, hi_b = _log_bisect(R, theta, math.sqrt(m + 1) * theta)
    beta = _newton(R, dR, 0.5 * (lo_b + hi_b), lo_b, hi_b)
    scale = T * T * theta ** (2.0 / m)
    if abs(R(alpha)) > 1e-9 * scale or abs(R(beta)) > 1e-9 * scale:
        raise NumericFailureError("root polishing did not converge")
    excess = A * A * c2 * alpha**2 / (T * T * (T * T - c2 * alpha**2))
    return RootPair(alpha=alpha, beta=beta, theta=theta, alpha_excess=excess)


@dataclass(frozen=True)
class EllipsoidSlice:
    """``{v : ||(v - center) S||^2 <= r2}``."""

    center: np.ndarray
    S: np.ndarray
    r2: float

    @property
    def m(self) -> int:
        return self.center.size

    @property
    def volume(self) -> float:
        if self.r2 <= 0:
            return 0.0
        return unit_ball_volume(self.m) * self.r2 ** (self.m / 2) / abs(np.linalg.det(self.S))

    def semi_axes(self) -> np.ndarray:
        return math.sqrt(max(self.r2, 0.0)) / np.linalg.svd(self.S, compute_uv=False)

    def surface_area(self) -> float:
        ax = np.sort(self.semi_axes())[::-1]
        if self.m == 2:
            a, b = ax
            return float(4 * a * ellipe(1 - (b / a) ** 2)) if a > 0 else 0.0
        if self.m == 3:
            # Knud Thomsen's formula, relative error below 1.1 percent
            p = 1.6075
            a, b, c = ax
            return float(4 * math.pi * (((a * b) ** p + (a * c) ** p + (b * c) ** p) / 3) ** (1 / p)) * 1.011
        raise ValueError("surface area implemented for m = 2, 3")

    def contains(self, V: np.ndarray) -> np.ndarray:
        Y = (np.atleast_2d(V) - self.center) @ self.S
        return np.einsum("ij,ij->i", Y, Y) <= self.r2

    def bounding_box(self):
        half = math.sqrt(max(self.r2, 0.0)) * np.linalg.norm(np.linalg.inv(self.S), axis=0)
        return self.center - half, self.center + half


def slice_center(spec: SkewBallSpec, t: float) -> np.ndarray:
    """Point of the slice where ``||g1^{-1} u_v a_t q~ g2||`` is smallest."""
    m = spec.m
    qi = np.rint(np.linalg.inv(spec.q))
    return -np.linalg.det(spec.A1) * spec.v1 - t ** (1.0 / m + 1) * (spec.v2 @ np.linalg.inv(spec.A2) @ qi)


def ellipsoid_slice(spec: SkewBallSpec, t: float) -> EllipsoidSlice:
    """Slice of the ``q``-component at height ``t``."""
    if t <= 0:
        raise PreconditionError("t must be positive")
    c1 = 1.0 / np.linalg.det(spec.A1)
    S = c1 * spec.q @ spec.A2
    return EllipsoidSlice(center=slice_center(spec, t), S=S, r2=float(radius_poly(spec, t)))


def _component_integral(m, T, A, c2, rtol=1e-9):
    # int_alpha^beta R^{m/2} t^{-(m+2)} dt in u = log t, split at theta
    spec_like = _Bare(m, T, A, c2)
    rp = roots(spec_like)

    def g(u):
        t = np.exp(u)
        R = -c2 * t ** (2.0 / m + 2) + t ** (2.0 / m) * T * T - A * A
        return np.maximum(R, 0.0) ** (m / 2) * t ** (-(m + 1.0))

    la, lt, lb = math.log(rp.alpha), math.log(rp.theta), math.log(rp.beta)
    return tanh_sinh(g, la, lt, rtol) + tanh_sinh(g, lt, lb, rtol)


class _Bare:
    # duck-typed stand-in for SkewBallSpec carrying only what roots() reads
    def __init__(self, m, T, A, c2):
        self.m, self.T, self._A, self._c2 = m, T, A, c2

    def a_norm(self):
        return self._A

    @property
    def corner(self):
        return math.sqrt(self._c2)


def v_volume(spec: SkewBallSpec, rtol: float = 1e-9) -> float:
    """Haar volume of the ``q``-component of the skew ball (zero if empty)."""
    A = spec.a_norm()
    M, _ = critical_data(spec)
    if A * A >= M:
        return 0.0
    I = _component_integral(spec.m, spec.T, A, spec.corner**2, rtol)
    return unit_ball_volume(spec.m) * spec.det_ratio * I


@dataclass
class SplitIntegrals:
    """The component integral cut at ``alpha_delta`` and ``lambda``."""

    alpha: float
    alpha_delta: float
    lam: float
    beta: float
    parts: tuple
    ordered: bool


def split_integrals(spec: SkewBallSpec, eps1: float, eps2: float, rtol: float = 1e-9) -> SplitIntegrals:
    """Pieces of ``int_alpha^beta R^{m/2} t^{-(m+2)} dt`` over the three ranges.

    ``delta = A / T^{1+eps1}``, ``alpha_delta^{1/m} = alpha^{1/m} + delta`` and
    ``lambda = (A / T^{eps2})^{m/(m+1)}``.  When the cut points are out of
    order the pieces are not defined and ``parts`` is empty.
    """
    m, T = spec.m, spec.T
    A = spec.a_norm()
    c2 = spec.corner**2
    rp = roots(spec)
    delta = A / T ** (1 + eps1)
    a_d = (rp.alpha ** (1.0 / m) + delta) ** m
    lam = (A / T**eps2) ** (m / (m + 1.0))
    ordered = rp.alpha < a_d < lam < rp.beta

    def g(u):
        t = np.exp(u)
        R = -c2 * t ** (2.0 / m + 2) + t ** (2.0 / m) * T * T - A * A
        return np.maximum(R, 0.0) ** (m / 2) * t ** (-(m + 1.0))

    parts = ()
    if ordered:
        cuts = [math.log(x) for x in (rp.alpha, a_d, lam, rp.beta)]
        parts = tuple(tanh_sinh(g, lo, hi, rtol) for lo, hi in zip(cuts, cuts[1:]))
    return SplitIntegrals(rp.alpha, a_d, lam, rp.beta, parts, ordered)


def component_upper_bound(spec: SkewBallSpec) -> float:
    """``v_m |det ratio| T^{m(m+1)} / A^{m^2}``."""
    m = spec.m
    return unit_ball_volume(m) * spec.det_ratio * spec.T ** (m * (m + 1)) / spec.a_norm() ** (m * m)


@dataclass
class HVolume:
    value: float
    N: float
    tail: float
    components: int
    per_q: list = field(default_factory=list)


def h_volume(spec: SkewBallSpec, N: float, keep_per_q: bool = False, rtol: float = 1e-9) -> HVolume:
    """Sum of component volumes over ``||q|| <= N``.

    ``tail`` bounds the neglected components with ``||q|| > N`` through the
    per-component bound and the certified series tail.
    """
    m = spec.m
    Q = enumerate_sl(m, N)
    Af = np.einsum("ij,kjl,lr->kir", spec.A1, Q.astype(float), spec.A2, optimize=True)
    A = hs_norm_batch(Af)
    M, _ = critical_data(spec)
    live = A * A < M
    c2 = spec.corner**2
    vm = unit_ball_volume(m) * spec.det_ratio
    # components sharing the same A have the same volume
    uniq, inv = np.unique(A[live], return_inverse=True)
    vols_u = np.array([vm * _component_integral(m, spec.T, a, c2, rtol) for a in uniq])
    vols = np.zeros(A.size)
    vols[live] = vols_u[inv]
    tail = vm * spec.T ** (m * (m + 1)) * tail_bound(spec.A1, spec.A2, m * m, N)
    per_q = []
    if keep_per_q:
        per_q = [(Q[i], float(A[i]), float(vols[i])) for i in np.flatnonzero(live)]
    return HVolume(float(math.fsum(vols)), N, float(tail), int(live.sum()), per_q)


def main_term(spec: SkewBallSpec, N: float) -> float:
    """``C(m) |det ratio| T^{m(m+1)} sum_{||q|| <= N} ||A1 q A2||^{-m^2}``."""
    m = spec.m
    s = series_sigma(spec.A1, spec.A2, m * m, N).value
    return beta_constant(m) * spec.det_ratio * s * spec.T ** (m * (m + 1))


def omega(g1, g2, N: float) -> float:
    """Limit ratio of skew-ball to centred-ball volumes, truncated at ``N``."""
    g1 = np.asarray(g1, dtype=float)
    m = g1.shape[0] - 1
    spec = SkewBallSpec(m, 1.0, g1, g2)
    I = np.eye(m)
    num = series_sigma(spec.A1, spec.A2, m * m, N).value
    den = series_sigma(I, I, m * m, N).value
    return spec.det_ratio * num / den


# ---------------------------------------------------------------- Monte Carlo


def _mc_component(spec: SkewBallSpec, samples: int, rng: np.random.Generator, batch: int = 200_000):
    """Importance-sampled Haar volume of one component.

    Heights are drawn from ``t^{-(m+1)}`` on the a priori range where
    ``R > 0`` is possible, and ``v`` uniformly from a box that contains the
    slice for any ``R <= T^2 t^{2/m}``.  Membership is decided on the
    assembled matrix ``g1^{-1} u_v a_t q~ g2``.
    """
    m = spec.m
    T = spec.T
    A = spec.a_norm()
    c = abs(spec.corner)
    t_lo = (A / T) ** m
    t_hi = T / c
    if t_lo >= t_hi:
        return 0.0, 0.0
    Z = (t_lo ** (-m) - t_hi ** (-m)) / m
    cols = np.linalg.norm(np.linalg.inv(spec.q @ spec.A2), axis=0)
    half_unit = abs(np.linalg.det(spec.A1)) * T * cols  # times t^{1/m}
    weight = float(np.prod(2 * half_unit)) * Z
    g1inv = np.linalg.inv(spec.g1)
    qt = embed_block(spec.q)
    A2inv = np.linalg.inv(spec.A2)
    qinv = np.rint(np.linalg.inv(spec.q))
    hits = 0
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        u = rng.random(k)
        t = (t_lo ** (-m) - u * m * Z) ** (-1.0 / m)
        center = (
            -np.linalg.det(spec.A1) * spec.v1[None, :]
            - (t ** (1.0 / m + 1))[:, None] * (spec.v2 @ A2inv @ qinv)[None, :]
        )
        half = half_unit[None, :] * (t ** (1.0 / m))[:, None]
        v = center + (2 * rng.random((k, m)) - 1) * half
        H = np.zeros((k, m + 1, m + 1))
        s = t ** (-1.0 / m)
        H[:, :m, :m] = s[:, None, None] * spec.q[None, :, :]
        H[:, m, :m] = s[:, None] * (v @ spec.q)
        H[:, m, m] = t
        G = np.einsum("ij,kjl,lr->kir", g1inv, H, spec.g2, optimize=True)
        hits += int(np.count_nonzero(hs_norm_batch(G) <= T))
        done += k
    p = hits / samples
    est = weight * p
    se = weight * math.sqrt(max(p * (1 - p), 0.0) / samples)
    return est, se


def mc_volume(spec: SkewBallSpec, samples: int, seed: int, N: float | None = None):
    """Monte Carlo oracle for :func:`v_volume` (or :func:`h_volume` if no q).

    Returns ``(estimate, standard_error)``.
    """
    rng = np.random.default_rng(seed)
    if spec.q is not None:
        return _mc_component(spec, samples, rng)
    if N is None:
        raise PreconditionError("N is required when q is not fixed")
    Q = enumerate_sl(spec.m, N)
    M, _ = critical_data(spec)
    live = [q for q in Q if spec.a_norm(q) ** 2 < M]
    w = np.array([spec.a_norm(q) ** (-spec.m**2) for q in live])
    alloc = np.maximum((samples * w / w.sum()).astype(int), 1000)
    est = 0.0
    var = 0.0
    for q, n in zip(live, alloc):
        e, s = _mc_component(spec.with_q(q), int(n), rng)
        est += e
        var += s * s
    return est, math.sqrt(var)


def matrix_membership(spec: SkewBallSpec, v, t) -> bool:
    """Direct test ``||g1^{-1} u_v a_t q~ g2|| <= T``."""
    h = u_mat(v) @ a_mat(spec.m, t) @ embed_block(spec.q)
    return bool(np.linalg.norm(np.linalg.solve(spec.g1, h) @ spec.g2) <= spec.T)


# ----------------------------------------------------------------- D1 check


def d1_delta(m: int, eps: float) -> float:
    """Radius step whose asymptotic volume ratio is ``1 + eps/2``."""
    return (1 + eps / 2) ** (1.0 / (m * (m + 1))) - 1


@dataclass
class D1Report:
    eps: float
    delta: float
    T_list: list
    ratios: list
    limit: float
    passed: bool


def d1_check(g1, g2, T_list, eps: float, N: float = 40.0, T0: float = 0.0) -> D1Report:
    """Check ``h_volume((1+delta)T) / h_volume(T) <= 1 + eps`` for ``T >= T0``."""
    g1 = np.asarray(g1, dtype=float)
    m = g1.shape[0] - 1
    delta = d1_delta(m, eps)
    ratios = []
    for T in T_list:
        spec = SkewBallSpec(m, T, g1, g2)
        ratios.append(h_volume(spec.with_T((1 + delta) * T), N).value / h_volume(spec, N).value)
    ok = all(r <= 1 + eps for T, r in zip(T_list, ratios) if T >= T0)
    return D1Report(eps, delta, list(T_list), ratios, (1 + delta) ** (m * (m + 1)), ok)


# --------------------------------------------------------------- shift lemma


def _grid(lo, hi, n):
    axes = [np.linspace(l, h, n, endpoint=False) + (h - l) / (2 * n) for l, h in zip(lo, hi)]
    cell = float(np.prod([(h - l) / n for l, h in zip(lo, hi)]))
    P = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
    return P, cell


def _default_grid(m):
    return 400 if m == 2 else 90


def shift_gap(f, E: EllipsoidSlice, y, f_sup: float, grid: int | None = None):
    """Gap ``|int_E f(v) dv - int_E f(y + v) dv|`` and its linear bound.

    Returns ``(gap, bound)`` with ``bound = SHIFT_CONSTANT * f_sup * ||y|| * S(E)``.
    """
    y = np.asarray(y, dtype=float)
    lo, hi = E.bounding_box()
    P, cell = _grid(lo, hi, grid or _default_grid(E.m))
    P = P[E.contains(P)]
    gap = abs(float(np.sum(f(P) - f(P + y)))) * cell
    bound = SHIFT_CONSTANT * f_sup * float(np.linalg.norm(y)) * E.surface_area()
    return gap, bound


def symmetric_difference_volume(E: EllipsoidSlice, y, grid: int | None = None) -> float:
    """Grid estimate of ``vol(E symmetric-difference (E - y))``."""
    y = np.asarray(y, dtype=float)
    lo, hi = E.bounding_box()
    lo = np.minimum(lo, lo - y)
    hi = np.maximum(hi, hi - y)
    P, cell = _grid(lo, hi, grid or _default_grid(E.m))
    return float(np.count_nonzero(E.contains(P) ^ E.contains(P + y))) * cell
