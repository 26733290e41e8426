import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latorbit.errors import NoComponentError
from latorbit.linalg import random_rotation, random_sl
from latorbit.series import series_sigma
from latorbit.volume import (SHIFT_CONSTANT, SkewBallSpec, beta_constant, component_upper_bound, critical_data,
                             d1_check, ellipsoid_slice, h_volume, main_term, matrix_membership, mc_volume, omega,
                             radius_poly, roots, shift_gap, split_integrals, symmetric_difference_volume, v_volume)

I3 = np.eye(3)
I2 = np.eye(2, dtype=int)


def base(T=10.0, q=I2):
    return SkewBallSpec(2, T, I3, I3, q)


def test_radius_and_critical_point():
    s = base()
    assert radius_poly(s, 1.0) == pytest.approx(97)
    assert radius_poly(s, 1e-9) < 0
    M, theta = critical_data(s)
    assert M == pytest.approx(2 / 3 / math.sqrt(3) * 1000)
    assert theta == pytest.approx(10 / math.sqrt(3))
    assert radius_poly(s, theta) == pytest.approx(M - 2)
    assert critical_data(base(20.0))[0] == pytest.approx(M * 2**3)


def test_roots():
    r = roots(base())
    assert r.alpha == pytest.approx(0.0200001, rel=1e-6)
    # the quoted 9.98997 is rounded; the cubic's root is 9.989985
    assert r.beta == pytest.approx(9.98997, rel=2e-6)
    assert -r.beta**3 + 100 * r.beta - 2 == pytest.approx(0, abs=1e-9)
    assert r.alpha < r.theta < r.beta
    assert r.alpha_excess == pytest.approx(r.alpha - 2 / 100, rel=1e-6)
    q = np.array([[1, 30], [0, 1]])
    with pytest.raises(NoComponentError):
        roots(base(q=q))
    assert v_volume(base(q=q)) == 0


def test_slice():
    s = base()
    E = ellipsoid_slice(s, 1.0)
    assert E.volume == pytest.approx(math.pi * 97)
    np.testing.assert_allclose(E.center, 0)
    assert ellipsoid_slice(s, 1e-6).volume == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_slice_matches_matrix_membership(seed):
    rng = np.random.default_rng(seed)
    g1, g2 = random_sl(3, rng, 0.3), random_sl(3, rng, 0.3)
    s = SkewBallSpec(2, 8.0, g1, g2, I2)
    try:
        r = roots(s)
    except NoComponentError:
        return
    t = math.exp(rng.uniform(math.log(r.alpha), math.log(r.beta)))
    E = ellipsoid_slice(s, t)
    lo, hi = E.bounding_box()
    V = lo + (hi - lo) * rng.random((40, 2))
    inside = E.contains(V)
    for v, a in zip(V, inside):
        Y = (v - E.center) @ E.S
        if abs(Y @ Y - E.r2) > 1e-6 * E.r2:
            assert matrix_membership(s, v, t) == a


def test_component_volume_against_mc():
    s = base()
    v = v_volume(s)
    est, se = mc_volume(s, 1_000_000, 42)
    assert abs(est - v) <= 3 * se
    assert v <= component_upper_bound(s)


def test_beta_constant():
    assert beta_constant(2) == pytest.approx(math.pi / 6)
    assert beta_constant(3) == pytest.approx(3 * math.pi**1.5 * math.gamma(4.5) / (2 * math.gamma(7)))


def test_h_volume_near_main_term():
    s = SkewBallSpec(2, 25.0, I3, I3)
    assert h_volume(s, 40).value == pytest.approx(main_term(s, 40), rel=0.1)
    assert h_volume(SkewBallSpec(2, 1.0, I3, I3), 10).value == 0


def test_omega():
    assert omega(I3, I3, 20) == pytest.approx(1)
    k = np.eye(3)
    k[:2, :2] = random_rotation(2, np.random.default_rng(0))
    assert omega(I3, k, 20) == pytest.approx(1, rel=1e-12)
    g2 = np.diag([2, 0.5, 1.0])
    expect = series_sigma(I2, np.diag([2, 0.5]), 4, 40).value / series_sigma(I2, I2, 4, 40).value
    assert omega(I3, g2, 40) == pytest.approx(expect, rel=1e-12)


def test_d1():
    rep = d1_check(I3, I3, [25, 50, 100], 0.5, T0=50)
    assert rep.passed
    assert all(r <= 1.5 for r in rep.ratios[1:])


def test_split_integrals_sum():
    s = base(T=1e3)
    sp = split_integrals(s, 0.1, 0.1)
    assert sp.ordered
    total = v_volume(s) / (math.pi * s.det_ratio)
    assert sum(sp.parts) == pytest.approx(total, rel=1e-8)


def test_shift_gap():
    E = ellipsoid_slice(base(), 1.0)
    f = lambda P: np.cos(P[:, 0] / 3) ** 2
    assert shift_gap(f, E, [0, 0], 1.0) == (0.0, 0.0)
    gap, bound = shift_gap(lambda P: np.ones(len(P)), E, [0.5, 0.2], 1.0)
    assert gap == pytest.approx(0, abs=1e-8)
    sd = symmetric_difference_volume(E, [0.5, 0.2])
    assert sd <= bound
    assert SHIFT_CONSTANT * np.hypot(0.5, 0.2) * E.surface_area() == pytest.approx(bound)
    gap, bound = shift_gap(f, E, [0.5, 0.2], 1.0)
    assert gap <= bound


def test_surface_area_upper_bound_m3():
    # sphere of radius 2 and a prolate spheroid with a closed form
    from latorbit.volume import EllipsoidSlice
    S = EllipsoidSlice(np.zeros(3), np.eye(3) / 2, 1.0)
    assert S.surface_area() >= 16 * math.pi
    a, c = 1.0, 3.0
    e = math.sqrt(1 - a * a / (c * c))
    exact = 2 * math.pi * a * a * (1 + c / (a * e) * math.asin(e))
    E = EllipsoidSlice(np.zeros(3), np.diag([1 / a, 1 / a, 1 / c]), 1.0)
    assert exact <= E.surface_area() <= exact * 1.03
