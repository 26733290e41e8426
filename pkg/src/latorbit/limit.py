"""The limiting orbit measure for m = 2 and the checks built around it.

The limit is the uniform measure on the sphere times, on each fiber, Haar
measure on SL(2, Z)\\SL(2, R) weighted by

    Phi_{x0}(eta) = sum_{q in SL(2, Z)} ||g0^{-1} q eta||^{-4}.

Fiber points are parametrised by ``z = x + iy`` in the fundamental domain
``F = {|x| <= 1/2, |z| >= 1}`` through the lattice basis

    eta(z) = [[y^{-1/2}, 0], [x y^{-1/2}, y^{1/2}]]

whose Haar measure is ``dx dy / y^2``.  With ``x = sin(phi)`` and
``y = cos(phi) / u`` that measure becomes ``dphi du`` on
``[-pi/6, pi/6] x (0, 1]``, which gives exact Haar sampling on F.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .enumeration import enumerate_sl
from .errors import PreconditionError
from .linalg import random_rotation, skew_blocks
from .moduli import EmpiricalMeasure, ModuliPoint, base_point, fiber_coords

# SL(2, Z) count in HS balls grows like COUNT2 * s^2
COUNT2 = 6.0
PHI_RADIUS = 20.0
Y_MAX = 1e5


@numba.njit(cache=True)
def _phi_one(e00, e10, e11, gi, R, Rp):
    # bases (u1, u2) of the lattice with rows b1 = (e00, 0), b2 = (e10, e11)
    G00 = e00 * e00
    G01 = e00 * e10
    G11 = e10 * e10 + e11 * e11
    det = G00 * G11 - G01 * G01
    s = 0.0
    R2 = R * R
    Rp2 = Rp * Rp
    bmax = int(math.floor(math.sqrt(Rp2 * G00 / det))) + 1
    for b in range(-bmax, bmax + 1):
        qrem = Rp2 - b * b * det / G00
        if qrem < 0:
            continue
        ac = -b * G01 / G00
        asp = math.sqrt(qrem / G00) + 1.0
        for a in range(int(math.floor(ac - asp)), int(math.ceil(ac + asp)) + 1):
            if a == 0 and b == 0:
                continue
            x0, x1, y0, y1 = 1, 0, 0, 1
            aa = a
            bb = b
            while bb != 0:
                qq = aa // bb
                aa, bb = bb, aa - qq * bb
                x0, x1 = x1, x0 - qq * x1
                y0, y1 = y1, y0 - qq * y1
            if aa < 0:
                aa = -aa
                x0 = -x0
                y0 = -y0
            if aa != 1:
                continue
            u1x = a * e00 + b * e10
            u1y = b * e11
            n1 = u1x * u1x + u1y * u1y
            if n1 > Rp2:
                continue
            # a d - b c = 1 with (c, d) = (-y0, x0) + k (a, b)
            v0x = -y0 * e00 + x0 * e10
            v0y = x0 * e11
            kc = -(v0x * u1x + v0y * u1y) / n1
            ks = math.sqrt(max(Rp2 - n1, 0.0) / n1) + 1.0
            for k in range(int(math.floor(kc - ks)), int(math.ceil(kc + ks)) + 1):
                u2x = v0x + k * u1x
                u2y = v0y + k * u1y
                if n1 + u2x * u2x + u2y * u2y > Rp2:
                    continue
                m00 = gi[0, 0] * u1x + gi[0, 1] * u2x
                m01 = gi[0, 0] * u1y + gi[0, 1] * u2y
                m10 = gi[1, 0] * u1x + gi[1, 1] * u2x
                m11 = gi[1, 0] * u1y + gi[1, 1] * u2y
                t = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11
                if t <= R2:
                    s += 1.0 / (t * t)
    return s


@numba.njit(cache=True)
def _phi_many(X, Y, gi, R, Rp, tail):
    out = np.empty(X.size)
    for i in range(X.size):
        sy = math.sqrt(Y[i])
        out[i] = _phi_one(1.0 / sy, X[i] / sy, sy, gi, R, Rp) + tail
    return out


def phi_fiber(x, y, g0inv=None, R: float = PHI_RADIUS) -> np.ndarray:
    """``sum_q ||g0inv q eta(z)||^{-4}`` with a uniform cutoff and tail.

    Terms with ``||g0inv q eta|| <= R`` are summed exactly.  The rest is
    replaced by its asymptotic value ``COUNT2 / (|det g0inv| R^2)``, which
    follows from the quadratic growth of the SL(2, Z) count.  Unlike a
    cutoff on ``||q||`` this stays accurate deep in the cusp.
    """
    gi = np.eye(2) if g0inv is None else np.asarray(g0inv, dtype=float)
    X = np.atleast_1d(np.asarray(x, dtype=float))
    Y = np.atleast_1d(np.asarray(y, dtype=float))
    smin = np.linalg.svd(gi, compute_uv=False)[-1]
    tail = COUNT2 / (abs(np.linalg.det(gi)) * R * R)
    return _phi_many(X, Y, gi, float(R), float(R / smin), tail)


def eta_of(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    E = np.zeros(x.shape + (2, 2))
    E[..., 0, 0] = 1 / np.sqrt(y)
    E[..., 1, 0] = x / np.sqrt(y)
    E[..., 1, 1] = np.sqrt(y)
    return E


def haar_F(n: int, rng: np.random.Generator, y_max: float = math.inf):
    """Exact Haar-distributed points of F (optionally with ``y <= y_max``).

    Returns ``(x, y, mass)`` where ``mass`` is the Haar measure of the region.
    """
    phi = (rng.random(n) - 0.5) * (math.pi / 3)
    lo = np.cos(phi) / y_max if math.isfinite(y_max) else np.zeros(n)
    u = 1 - rng.random(n) * (1 - lo)
    x = np.sin(phi)
    y = np.cos(phi) / u
    mass = math.pi / 3 - (1.0 / y_max if math.isfinite(y_max) else 0.0)
    return x, y, mass


@dataclass
class LimitSamples:
    w: np.ndarray
    x: np.ndarray
    y: np.ndarray
    eta: np.ndarray
    lambdas: np.ndarray
    accept_rate: float
    envelope: float
    neglected_mass: float


def _g0inv(x0: ModuliPoint) -> np.ndarray:
    return np.linalg.inv(fiber_coords(x0).eta)


def sample_limit_measure(x0: ModuliPoint, count: int, seed: int, R: float = PHI_RADIUS,
                         y_max: float = Y_MAX, batch: int = 20_000) -> LimitSamples:
    """Draw ``count`` points from the limiting measure of ``x0`` (m = 2).

    Sphere coordinates are uniform.  Fiber points come from rejection
    sampling against an envelope on Haar-uniform proposals in ``F``
    truncated at ``y_max``.
    """
    if x0.m != 2:
        raise PreconditionError("the limit sampler is implemented for m = 2")
    rng = np.random.default_rng(seed)
    gi = _g0inv(x0)
    # envelope from a grid over F, raised on the fly if a proposal exceeds it
    ph, uu = np.meshgrid(np.linspace(-math.pi / 6, math.pi / 6, 41), np.linspace(0.02, 1, 50))
    env = 1.25 * float(np.max(phi_fiber(np.sin(ph).ravel(), (np.cos(ph) / uu).ravel(), gi, R)))
    xs, ys = [], []
    proposed = 0
    got = 0
    while got < count:
        x, y, _ = haar_F(batch, rng, y_max)
        ph_v = phi_fiber(x, y, gi, R)
        u = rng.random(batch)
        proposed += batch
        if ph_v.max() > env:
            # restart with a larger envelope so every draw used the same one
            env = 1.25 * float(ph_v.max())
            xs, ys, got, proposed = [], [], 0, 0
            continue
        acc = u * env < ph_v
        xs.append(x[acc])
        ys.append(y[acc])
        got += int(acc.sum())
    x = np.concatenate(xs)[:count]
    y = np.concatenate(ys)[:count]
    W = rng.standard_normal((count, 3))
    W /= np.linalg.norm(W, axis=1)[:, None]
    lam = np.stack([1 / np.sqrt(y), np.sqrt((x * x + y * y) / y)], axis=1)
    rate = got / proposed
    # Haar mass above y_max is 1/y_max and Phi <= env there, while the total
    # weighted mass is rate * env * |F|
    neglected = 1.0 / (y_max * rate * math.pi / 3)
    return LimitSamples(W, x, y, eta_of(x, y), lam, rate, env, neglected)


# ----------------------------------------------------------- test families


@dataclass(frozen=True)
class Cap:
    center: np.ndarray
    angle: float

    @property
    def area_fraction(self) -> float:
        return (1 - math.cos(self.angle)) / 2

    def indicator(self, W: np.ndarray) -> np.ndarray:
        return (W @ self.center >= math.cos(self.angle)).astype(float)


def cap_family(n: int = 20, seed: int = 0):
    """Seeded spherical caps with angular radii in ``[0.3, 1.2]``."""
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((n, 3))
    C /= np.linalg.norm(C, axis=1)[:, None]
    ang = rng.uniform(0.3, 1.2, n)
    return [Cap(C[i], float(ang[i])) for i in range(n)]


@dataclass(frozen=True)
class FiberTest:
    """Gaussian bump in the first minimum ``lambda_1``."""

    center: float
    width: float

    def __call__(self, lambdas: np.ndarray) -> np.ndarray:
        return np.exp(-(((lambdas[:, 0] - self.center) / self.width) ** 2))


def fiber_family(n: int = 3, seed: int = 0):
    """Seeded bumps with centres in ``[0.5, 1.0]`` and widths in ``[0.08, 0.2]``."""
    rng = np.random.default_rng(seed)
    return [FiberTest(float(c), float(w)) for c, w in zip(rng.uniform(0.5, 1.0, n), rng.uniform(0.08, 0.2, n))]


def cap_discrepancy(emp: EmpiricalMeasure, caps) -> np.ndarray:
    """``|empirical mass - area fraction|`` for each cap."""
    wt = emp.weights / emp.weights.sum()
    return np.array([abs(float(wt @ c.indicator(emp.w)) - c.area_fraction) for c in caps])


@dataclass
class TestComparison:
    name: str
    empirical: float
    empirical_se: float
    model: float
    model_se: float

    @property
    def z(self) -> float:
        se = math.hypot(self.empirical_se, self.model_se)
        return abs(self.empirical - self.model) / se if se > 0 else math.inf


@dataclass
class ComparisonReport:
    T: float
    caps: np.ndarray
    cap_sup: float
    fiber: list = field(default_factory=list)
    product: list = field(default_factory=list)


def compare(emp: EmpiricalMeasure, x0: ModuliPoint, caps=None, fibers=None, mc_count: int = 100_000,
            seed: int = 0) -> ComparisonReport:
    """Compare the empirical orbit measure with the limit measure.

    Caps are scored against exact area fractions.  Fiber and product tests
    are scored against a Monte Carlo sample of the limit.  The empirical
    standard error uses the Kish effective size of the records.
    """
    caps = cap_family(20, seed) if caps is None else caps
    fibers = fiber_family(3, seed) if fibers is None else fibers
    d = cap_discrepancy(emp, caps)
    S = sample_limit_measure(x0, mc_count, seed + 1)
    rep = ComparisonReport(emp.T, d, float(d.max()))
    for i, f in enumerate(fibers):
        e, es = emp.mean(f(emp.lambdas))
        v = f(S.lambdas)
        rep.fiber.append(TestComparison(f"fiber{i}", e, es, float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))))
    for i, (f, c) in enumerate(zip(fibers, caps)):
        e, es = emp.mean(f(emp.lambdas) * c.indicator(emp.w))
        v = f(S.lambdas) * c.indicator(S.w)
        rep.product.append(TestComparison(f"product{i}", e, es, float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))))
    return rep


# ----------------------------------------------------- unfolding and mass


@dataclass(frozen=True)
class GramBump:
    """Right-SO(3)-invariant bump ``max(0, 1 - ||g g^T - S||^2 / r^2)``."""

    S: np.ndarray
    r: float

    @property
    def norm_bound(self) -> float:
        # ||g||^2 = tr(g g^T) <= tr(S) + sqrt(3) r on the support
        return math.sqrt(np.trace(self.S) + math.sqrt(3) * self.r)

    def of_blocks(self, t, p, M) -> np.ndarray:
        """Evaluate at ``g = [[t^{-1/2} M, 0], [t^{-1/2} p, t]]`` (batched)."""
        it = 1.0 / t
        P = np.empty(M.shape[:-2] + (3, 3))
        P[..., :2, :2] = it[..., None, None] * np.einsum("...ij,...kj->...ik", M, M)
        Mp = it[..., None] * np.einsum("...ij,...j->...i", M, p)
        P[..., :2, 2] = Mp
        P[..., 2, :2] = Mp
        P[..., 2, 2] = it * np.einsum("...i,...i->...", p, p) + t * t
        D = P - self.S
        return np.maximum(0.0, 1 - np.einsum("...ij,...ij->...", D, D) / self.r**2)

    def __call__(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        D = np.einsum("...ij,...kj->...ik", g, g) - self.S
        return np.maximum(0.0, 1 - np.einsum("...ij,...ij->...", D, D) / self.r**2)


@dataclass
class UnfoldingResult:
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    rhs_full_group: float

    @property
    def z(self) -> float:
        return abs(self.lhs - self.rhs) / math.hypot(self.lhs_se, self.rhs_se)


def _tp_proposal(rng, n, B):
    # t log-uniform on [2/B^2, B]; p uniform in the box |p_i| <= B sqrt(t)
    lo, hi = 2.0 / B**2, B
    t = lo * (hi / lo) ** rng.random(n)
    half = B * np.sqrt(t)
    p = (2 * rng.random((n, 2)) - 1) * half[:, None]
    # density of (t, p) and the Haar factor 1 / t^4
    w = t * math.log(hi / lo) * (2 * half) ** 2 / t**4
    return t, p, w


def _bump_center(S):
    # Iwasawa coordinates (log t, p, x, log y) of the g with g g^T = S
    S2 = S[:2, :2]
    t = np.linalg.det(S2) ** -0.5
    M = np.linalg.cholesky(t * S2)
    p = t * np.linalg.solve(M, S[:2, 2])
    return np.array([math.log(t), p[0], p[1], M[1, 0] / M[0, 0], -2 * math.log(M[0, 0])])


def _gram_of(u):
    t = np.exp(u[..., 0])
    y = np.exp(u[..., 4])
    M = eta_of(u[..., 3], y)
    it = 1.0 / t
    P = np.empty(u.shape[:-1] + (3, 3))
    P[..., :2, :2] = it[..., None, None] * np.einsum("...ij,...kj->...ik", M, M)
    Mp = it[..., None] * np.einsum("...ij,...j->...i", M, u[..., 1:3])
    P[..., :2, 2] = Mp
    P[..., 2, :2] = Mp
    P[..., 2, 2] = it * np.einsum("...i,...i->...", u[..., 1:3], u[..., 1:3]) + t * t
    return P


def _local_proposal(f: GramBump):
    u0 = _bump_center(np.asarray(f.S, dtype=float))
    h = 1e-6
    J = np.stack([(_gram_of(u0 + h * e) - _gram_of(u0 - h * e)).ravel() / (2 * h) for e in np.eye(5)], axis=1)
    # the linearised support is an ellipsoid of radius r, about 2.2 sd in 5 dimensions
    cov = np.linalg.inv(J.T @ J) * (0.45 * f.r) ** 2
    return u0, cov


def unfolding_check(f: GramBump, samples: int, seed: int, batch: int = 4000) -> UnfoldingResult:
    """Two estimates of ``int_G f dg`` for m = 2.

    The left side integrates over ``u_v a_t eta(z) rho`` with ``z`` in the
    whole upper half plane.  The right side integrates over
    ``u_v a_t q eta(z) rho`` with ``z`` in F and sums over
    ``q in SL(2, Z) / {+-1}``.  Substituting ``p = v M`` for the block
    ``M = q eta(z)`` (determinant one) decouples ``v`` from ``q``.  A
    right-SO(3)-invariant ``f`` removes ``rho``.

    The left side draws ``(log t, p, x, log y)`` from a defensive mixture:
    a Gaussian fitted to the support of ``f`` plus the wide box proposal,
    which keeps the estimator unbiased wherever the Gaussian is thin.
    """
    rng = np.random.default_rng(seed)
    B = f.norm_bound
    Y = B**3
    lo, hi = 2.0 / B**2, B
    u0, cov = _local_proposal(f)
    L = np.linalg.cholesky(cov)
    icov = np.linalg.inv(cov)
    gnorm = 1.0 / math.sqrt((2 * math.pi) ** 5 * np.linalg.det(cov))
    mix = 0.95
    vals = []
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        local = rng.random(k) < mix
        u = np.empty((k, 5))
        nl = int(local.sum())
        u[local] = u0 + rng.standard_normal((nl, 5)) @ L.T
        t, p, _ = _tp_proposal(rng, k - nl, B)
        y = Y ** (2 * rng.random(k - nl) - 1)
        x = (2 * rng.random(k - nl) - 1) * np.sqrt(Y * y)
        u[~local] = np.column_stack([np.log(t), p, x, np.log(y)])
        d = u - u0
        q_loc = gnorm * np.exp(-0.5 * np.einsum("ki,ij,kj->k", d, icov, d))
        t = np.exp(u[:, 0])
        y = np.exp(u[:, 4])
        inside = ((t >= lo) & (t <= hi) & (np.abs(u[:, 1:3]) <= B * np.sqrt(t)[:, None]).all(axis=1)
                  & (y >= 1 / Y) & (y <= Y) & (np.abs(u[:, 3]) <= np.sqrt(Y * y)))
        q_wide = np.where(inside, 1.0 / (math.log(hi / lo) * (2 * B) ** 2 * t * math.log(Y * Y) * 2 * np.sqrt(Y * y)), 0.0)
        q = mix * q_loc + (1 - mix) * q_wide
        fv = f.of_blocks(t, u[:, 1:3], eta_of(u[:, 3], y))
        vals.append(np.where(fv > 0, fv / (t**3 * y) / np.where(q > 0, q, 1.0), 0.0))
        done += k
    v = np.concatenate(vals)
    lhs, lhs_se = float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))

    # rhs: every admissible q for each sample; -I acts trivially on F
    Qall = enumerate_sl(2, min(Y + 1, 200.0)).astype(float)
    first = np.where(Qall[:, 0, 0] != 0, Qall[:, 0, 0], Qall[:, 0, 1])
    Qhalf = Qall[first > 0]
    vals = []
    done = 0
    # keep the (k, |Q|, 3, 3) block near 2e6 entries
    step = max(1, min(batch // 4, 2_000_000 // len(Qhalf)))
    while done < samples:
        k = min(step, samples - done)
        t, p, w = _tp_proposal(rng, k, B)
        x, y, mass = haar_F(k, rng, Y)
        M = np.einsum("qij,kjl->kqil", Qhalf, eta_of(x, y))
        fv = f.of_blocks(t[:, None], p[:, None, :], M).sum(axis=1)
        vals.append(w * mass * fv)
        done += k
    v = np.concatenate(vals)
    rhs, rhs_se = float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
    return UnfoldingResult(lhs, lhs_se, rhs, rhs_se, 2 * rhs)


@dataclass
class MassResult:
    g0: np.ndarray
    mass: float
    se: float


def omega_fiber(g0, x, y, R: float = PHI_RADIUS) -> np.ndarray:
    """``omega(g0, eta(z))`` for ``z = x + iy``, normalised so ``omega(e, e) = 1``."""
    g0 = np.asarray(g0, dtype=float)
    eye = np.eye(3)
    A1, _, _, _ = skew_blocks(g0, eye)
    num = abs(np.linalg.det(A1)) ** 2 * phi_fiber(x, y, A1, R)
    den = phi_fiber(0.0, 1.0, None, R)[0]
    return num / den


def mass_invariance_check(g0_list, samples: int, seed: int, R: float = PHI_RADIUS):
    """``int_Y omega(g0, y) d nu_Y(y)`` for each ``g0`` (m = 2).

    ``omega(g0, .)`` is invariant under the rotation part of ``y``, so the
    integral reduces to Haar measure on F, sampled exactly.  The same
    points are reused for every ``g0``.
    """
    rng = np.random.default_rng(seed)
    x, y, mass = haar_F(samples, rng)
    out = []
    for g0 in g0_list:
        v = omega_fiber(g0, x, y, R) * mass
        out.append(MassResult(np.asarray(g0, dtype=float), float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))))
    return out


def rotation_samples(n: int, seed: int):
    """Haar-random rotations of R^3, used by the fiber-rotation checks."""
    rng = np.random.default_rng(seed)
    return [random_rotation(3, rng) for _ in range(n)]


def default_x0(m: int = 2) -> ModuliPoint:
    return base_point(m)
