"""Acceptance criteria shared by ``latorbit verify`` and the test suite.

Each criterion returns a :class:`Criterion` with a one-line detail string.
Thresholds are the stated ones; nothing here is tuned to the outcome.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from . import enumeration, limit, moduli, series, sl2, volume
from .errors import NoComponentError
from .linalg import (a_mat, block_iwasawa, embed_block, h_element, h_mul, random_rotation, random_sl,
                     u_mat)


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def exhaustive_count(n: int, T: float) -> int:
    """Count SL(n, Z) matrices with norm at most T by brute force over small entries."""
    b = int(math.floor(T))
    N2 = enumeration.norm2_budget(T)
    vals = range(-b, b + 1)
    c = 0
    for e in itertools.product(vals, repeat=n * n):
        if sum(x * x for x in e) <= N2 and round(np.linalg.det(np.array(e, dtype=float).reshape(n, n))) == 1:
            c += 1
    return c


def c1_enumeration() -> Criterion:
    enumeration._enumerate_cached.cache_clear()
    t0 = time.perf_counter()
    a, b = enumeration.count_sl(2, math.sqrt(2)), enumeration.count_sl(2, math.sqrt(3))
    dt = time.perf_counter() - t0
    oa, ob = exhaustive_count(2, math.sqrt(2)), exhaustive_count(2, math.sqrt(3))
    ok = a == 4 and b == 20 and oa == a and ob == b and dt < 1.0
    return Criterion(1, "exact enumeration", ok, f"counts {a},{b} oracle {oa},{ob} in {dt:.3f}s")


def c2_growth() -> Criterion:
    f2 = enumeration.growth_fit(2, [10, 20, 40, 60])
    f3 = enumeration.growth_fit(3, [5, 8, 11, 14])
    ok = abs(f2.exponent - 2) <= 0.1 and abs(f3.exponent - 6) <= 0.3
    return Criterion(2, "growth exponents", ok, f"n=2 {f2.exponent:.4f}, n=3 {f3.exponent:.4f}")


def beta_integral(m: int) -> float:
    a, b = m * m / 2, m / 2
    val, _ = quad(lambda u: u ** (a - 1) * (1 - u) ** b, 0, 1, epsabs=0, epsrel=1e-13, limit=200)
    return val


def c3_gamma() -> Criterion:
    ok = True
    parts = []
    for m in (2, 3):
        num = beta_integral(m)
        closed = math.exp(gammaln(m / 2 + 1) + gammaln(m * m / 2) - gammaln(m * m / 2 + m / 2 + 1))
        # the library constant must be (m/2) v_m times the same integral
        lib = volume.beta_constant(m) / (m / 2 * volume.unit_ball_volume(m))
        ok &= abs(num - closed) <= 1e-10 and abs(lib - num) <= 1e-10
        parts.append(f"m={m} |num-closed|={abs(num - closed):.1e} |const-num|={abs(lib - num):.1e}")
    ok &= abs(beta_integral(2) - 1 / 6) <= 1e-12
    return Criterion(3, "gamma-constant identity", bool(ok), "; ".join(parts))


def c4_volume() -> Criterion:
    e = np.eye(3)
    ratios = {}
    for T in (25, 50, 100):
        spec = volume.SkewBallSpec(2, T, e, e)
        ratios[T] = abs(volume.h_volume(spec, 40).value / volume.main_term(spec, 40) - 1)
    mono = ratios[25] >= ratios[50] >= ratios[100]
    ok = ratios[50] <= 0.10 and ratios[100] <= 0.05 and mono
    spec = volume.SkewBallSpec(2, 10, e, e)
    zs = []
    for i, q in enumerate([[[1, 0], [0, 1]], [[1, 1], [0, 1]], [[0, -1], [1, 0]], [[2, 1], [1, 1]]]):
        sq = spec.with_q(np.array(q))
        quad_v = volume.v_volume(sq)
        est, se = volume.mc_volume(sq, 400_000, 100 + i)
        zs.append(abs(est - quad_v) / se)
    ok &= max(zs) <= 3
    r = ", ".join(f"T={T}: {v:.4f}" for T, v in ratios.items())
    return Criterion(4, "volume asymptotics", bool(ok), f"|h/main-1| {r}; MC max z {max(zs):.2f}")


def c5_roots(pairs: int = 1000, seed: int = 0) -> Criterion:
    rng = np.random.default_rng(seed)
    Q = enumeration.enumerate_sl(2, 8)
    strict = coarse = 0
    done = 0
    while done < pairs:
        g1, g2 = random_sl(3, rng, 0.3), random_sl(3, rng, 0.3)
        T = 10 ** rng.uniform(1, 3)
        spec = volume.SkewBallSpec(2, T, g1, g2, Q[rng.integers(len(Q))])
        try:
            r = volume.roots(spec)
        except NoComponentError:
            continue
        done += 1
        A2 = spec.a_norm() ** 2
        strict += 0 < r.alpha < r.theta < r.beta < math.sqrt(3) * r.theta
        # alpha^{2/m} - A^2/T^2 in the cancellation-free form; window width A^2/(m T^2)
        coarse += 0 < r.alpha_excess < A2 / (2 * T**2)
    # refined residual: fit the constant at T = 1e2, check it holds at 1e3 and 1e4
    worst = {}
    for T in (1e2, 1e3, 1e4):
        vals = []
        for _ in range(200):
            g1, g2 = random_sl(3, rng, 0.3), random_sl(3, rng, 0.3)
            spec = volume.SkewBallSpec(2, T, g1, g2, Q[rng.integers(len(Q))])
            if spec.a_norm() > math.sqrt(T):
                continue
            vals.append(volume.roots(spec).alpha_excess * T ** (2 + 3))
        worst[T] = max(vals)
    C_hat = 2 * worst[1e2]
    ok = strict == pairs and coarse == pairs and all(v <= C_hat for v in worst.values())
    w = ", ".join(f"{v:.3g}" for v in worst.values())
    return Criterion(5, "roots lemma", ok, f"strict {strict}/{pairs}, coarse {coarse}/{pairs}, "
                     f"residual*T^5 max {w} vs C={C_hat:.3g}")


def c6_d1d2(seed: int = 0) -> Criterion:
    e = np.eye(3)
    rep = volume.d1_check(e, e, [25, 50, 100], 0.5, T0=50)
    om = volume.omega(e, e, 40)
    rng = np.random.default_rng(seed)
    dev = 0.0
    for _ in range(5):
        g1, g2 = random_sl(3, rng, 0.4), random_sl(3, rng, 0.4)
        k1, k2 = random_rotation(3, rng), random_rotation(3, rng)
        base = volume.omega(g1, g2, 40)
        dev = max(dev, abs(volume.omega(g1 @ k1, g2 @ k2, 40) / base - 1))
    ok = rep.passed and om == 1.0 and dev <= 1e-12
    r = ", ".join(f"{x:.4f}" for x in rep.ratios)
    return Criterion(6, "D1/D2", bool(ok), f"ratios {r} (eps 0.5), omega(e,e)={float(om)!r}, rotation dev {dev:.1e}")


def c7_algebra(seed: int = 0) -> Criterion:
    rng = np.random.default_rng(seed)
    Q = enumeration.enumerate_sl(2, 4)
    err_h = err_iw = err_f = err_u = err_e = 0.0
    for _ in range(200):
        h1 = h_element(rng.normal(size=2), rng.uniform(0.2, 5), Q[rng.integers(len(Q))])
        h2 = h_element(rng.normal(size=2), rng.uniform(0.2, 5), Q[rng.integers(len(Q))])
        P = h1.matrix() @ h2.matrix()
        err_h = max(err_h, np.abs(h_mul(h1, h2).matrix() - P).max() / max(1, np.abs(P).max()))
        g = random_sl(3, rng, 0.6)
        it = block_iwasawa(g)
        err_iw = max(err_iw, np.abs(it.lower() @ it.k - g).max())
    for _ in range(1000):
        t = 10 ** rng.uniform(-2, 2)
        v = rng.normal(size=2)
        sigma = [1, 2] if rng.random() < 0.5 else [2, 1]
        F = sl2.factorize_va(2, t, v, sigma)
        target = np.linalg.inv(a_mat(2, t)) @ np.linalg.inv(u_mat(v))
        err_f = max(err_f, np.abs(F[0] @ F[1] - target).max() / max(1, np.abs(target).max()))
    for n in range(1, 7):
        spec = sl2.IrrepSpec(n, 2)
        for _ in range(20):
            y1, y2 = rng.uniform(-2, 2, 2)
            err_u = max(err_u, np.abs(sl2.rep_unip(spec, y1) @ sl2.rep_unip(spec, y2) - sl2.rep_unip(spec, y1 + y2)).max())
    for _ in range(200):
        M1, M2 = random_sl(2, rng, 0.5), random_sl(2, rng, 0.5)
        j = int(rng.integers(1, 3))
        err_e = max(err_e, np.abs(sl2.embed_sl2(j, 2, M1) @ sl2.embed_sl2(j, 2, M2) - sl2.embed_sl2(j, 2, M1 @ M2)).max())
    ok = err_h <= 1e-12 and err_iw <= 1e-10 and err_f <= 1e-12 and err_u <= 1e-12 and err_e <= 1e-12
    return Criterion(7, "algebraic identities", bool(ok),
                     f"h_mul {err_h:.1e}, iwasawa {err_iw:.1e}, factorize {err_f:.1e}, unip {err_u:.1e}, embed {err_e:.1e}")


def _random_point(rng) -> moduli.ModuliPoint:
    return moduli.point_from_group(random_sl(3, rng, 0.5))


def c8_phi(seed: int = 0, N: float = 12.0) -> Criterion:
    rng = np.random.default_rng(seed)
    err = 0.0
    for _ in range(100):
        x0, x = _random_point(rng), _random_point(rng)
        a = moduli.phi_weight(x0, x, N)
        b = moduli.phi_weight_operator(x0, x, N)
        err = max(err, abs(a - b) / abs(a))
    # invariance compared shell by shell
    shell_err = 0.0
    for _ in range(10):
        x0, x = _random_point(rng), _random_point(rng)
        g0 = moduli.fiber_coords(x0).eta
        ref = series.phi_density(g0, moduli.fiber_coords(x).eta_reduced, N)
        ref_sh = dict(series.series_sigma(np.linalg.inv(g0), moduli.fiber_coords(x).eta_reduced, 4, N, True).shells)
        k = random_rotation(3, rng)
        rot = moduli.act(x, k)
        perm = np.array([[0, -1], [1, 0]]) if rng.random() < 0.5 else np.array([[-1, 0], [0, -1]])
        moved = moduli.make_point(perm @ x.basis, x.w)
        for y in (rot, moved):
            sh = dict(series.series_sigma(np.linalg.inv(g0), moduli.fiber_coords(y).eta_reduced, 4, N, True).shells)
            if sh.keys() != ref_sh.keys():
                shell_err = math.inf
                continue
            shell_err = max(shell_err, max(abs(sh[k2] - ref_sh[k2]) / ref_sh[k2] for k2 in sh))
        assert ref.value > 0
    ok = err <= 1e-12 and shell_err <= 1e-12
    return Criterion(8, "Phi dual path", bool(ok), f"dual-path rel err {err:.1e}, shell invariance {shell_err:.1e}")


def c9_equidistribution(seed: int = 0, mc: int = 100_000) -> Criterion:
    x0 = moduli.base_point(2)
    caps = limit.cap_family(20, seed)
    sups = {}
    rep = None
    for T in (6, 9, 12):
        emp = moduli.orbit_empirical(x0, T)
        if T == 12:
            rep = limit.compare(emp, x0, caps, limit.fiber_family(3, seed), mc, seed)
            sups[T] = rep.cap_sup
        else:
            sups[T] = float(limit.cap_discrepancy(emp, caps).max())
    mono = sups[6] >= sups[9] >= sups[12]
    zs = [c.z for c in rep.fiber]
    ok = mono and sups[12] <= 0.15 and max(zs) <= 3
    s = ", ".join(f"{v:.4f}" for v in sups.values())
    return Criterion(9, "equidistribution", bool(ok), f"cap sup {s}; fiber z {', '.join(f'{z:.2f}' for z in zs)}")


def c10_expansion(seeds=(0, 1, 2)) -> Criterion:
    spread = 0.0
    cmin = math.inf
    for n in range(1, 5):
        for beta in (0.1, 0.3, 0.5):
            vals = [sl2.expansion_constant(sl2.IrrepSpec(n, 2), beta, (0.0, 0.0), 1000, s) for s in seeds]
            mid = float(np.median(vals))
            cmin = min(cmin, min(vals))
            spread = max(spread, max(abs(v / mid - 1) for v in vals))
    rows = sl2.expansion_check_G("adjoint", np.eye(3), [1e-1, 1e-2, 1e-3], 0.5, 1.0, 2000, 11)
    ms = [r.min_sup for r in rows]
    inc = all(b > a for a, b in zip(ms, ms[1:]))
    dim = sl2.joint_fixed_dimension(2)
    ok = cmin > 0 and spread <= 0.10 and inc and dim == 0
    return Criterion(10, "expansion lemmata", bool(ok),
                     f"min C {cmin:.3g}, seed spread {spread:.2%}, min-sup {', '.join(f'{v:.4g}' for v in ms)}, fixed dim {dim}")


def c11_factorization(samples: int = 100_000, seed: int = 7) -> Criterion:
    rng = np.random.default_rng(3)
    g = random_sl(3, rng, 0.3)
    fs = [limit.GramBump(np.eye(3), 1.0), limit.GramBump(g @ g.T, 1.0)]
    zs = [limit.unfolding_check(f, samples, seed + i).z for i, f in enumerate(fs)]
    res = limit.mass_invariance_check([np.eye(3), random_sl(3, rng, 0.5)], samples, seed)
    zm = abs(res[0].mass - res[1].mass) / math.hypot(res[0].se, res[1].se)
    ok = max(zs) <= 3 and zm <= 3
    return Criterion(11, "measure factorization", bool(ok),
                     f"unfolding z {', '.join(f'{z:.2f}' for z in zs)}; mass {res[0].mass:.4f} vs {res[1].mass:.4f} (z {zm:.2f})")


def _random_ellipsoid(rng, m):
    S = random_sl(m, rng, 0.4) * rng.uniform(0.5, 2)
    return volume.EllipsoidSlice(rng.normal(size=m), S, float(rng.uniform(0.5, 2.0)))


def _wave(rng, m):
    k = rng.normal(size=m)
    a, ph = rng.uniform(0.5, 2), rng.uniform(0, 2 * math.pi)
    return (lambda V: a * np.cos(V @ k + ph) + 0.5), a + 0.5


def c12_shift(triples: int = 100, seed: int = 0) -> Criterion:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(triples):
        m = 2 if i % 5 else 3
        E = _random_ellipsoid(rng, m)
        f, sup = _wave(rng, m)
        y = rng.normal(size=m) * 10 ** rng.uniform(-2, 0)
        gap, bound = volume.shift_gap(f, E, y, sup)
        worst = max(worst, gap / bound)
    # slope of log gap and log symmetric difference against log ||y||
    E = _random_ellipsoid(rng, 2)
    f = lambda V: np.tanh(V @ np.array([1.0, 0.5]))
    d = np.array([0.6, 0.8])
    mags = np.geomspace(2e-3, 5e-2, 6)
    gaps = [volume.shift_gap(f, E, s * d, 1.0, grid=800)[0] for s in mags]
    sym = [volume.symmetric_difference_volume(E, s * d, grid=800) for s in mags]
    sl_gap = np.polyfit(np.log(mags), np.log(gaps), 1)[0]
    sl_sym = np.polyfit(np.log(mags), np.log(sym), 1)[0]
    ok = worst <= 1 and abs(sl_gap - 1) <= 0.2 and abs(sl_sym - 1) <= 0.2
    return Criterion(12, "symmetric-difference lemma", bool(ok),
                     f"max gap/bound {worst:.3f}, slopes gap {sl_gap:.3f} symdiff {sl_sym:.3f}")


CRITERIA = {
    1: c1_enumeration, 2: c2_growth, 3: c3_gamma, 4: c4_volume, 5: c5_roots, 6: c6_d1d2,
    7: c7_algebra, 8: c8_phi, 9: c9_equidistribution, 10: c10_expansion, 11: c11_factorization,
    12: c12_shift,
}
# criteria cheap enough for the quick gate
FAST = (1, 3, 5, 6, 7, 8, 12)


def run(numbers=None, echo=print) -> list:
    out = []
    for k in numbers or sorted(CRITERIA):
        t0 = time.perf_counter()
        try:
            c = CRITERIA[k]()
        except Exception as exc:  # a crash is a failure of that criterion only
            c = Criterion(k, CRITERIA[k].__name__, False, f"error: {type(exc).__name__}: {exc}")
        c.seconds = time.perf_counter() - t0
        if echo:
            echo(c.line())
        out.append(c)
    return out
