import math

import numpy as np
import pytest

from latorbit.limit import (GramBump, haar_F, mass_invariance_check, omega_fiber, phi_fiber, sample_limit_measure,
                            unfolding_check)
from latorbit.moduli import base_point
from latorbit.series import series_sigma


def test_haar_F():
    rng = np.random.default_rng(0)
    x, y, mass = haar_F(20000, rng)
    assert mass == pytest.approx(math.pi / 3)
    assert np.all(np.abs(x) <= 0.5) and np.all(x * x + y * y >= 1 - 1e-12)
    # Haar mass of y > 2 inside F is 1/2
    assert np.mean(y > 2) * mass == pytest.approx(0.5, abs=0.02)
    x, y, mass = haar_F(1000, rng, 10.0)
    assert y.max() <= 10 and mass == pytest.approx(math.pi / 3 - 0.1)


def test_phi_fiber_matches_series():
    v = phi_fiber(0.0, 1.0)[0]
    assert v == pytest.approx(series_sigma(np.eye(2), np.eye(2), 4, 200).value, rel=2e-3)
    # SL(2, Z) invariance of the density: z and -1/z, z and z+1
    a = phi_fiber(0.3, 1.4)[0]
    z = complex(0.3, 1.4)
    w = -1 / z
    assert phi_fiber(w.real, w.imag)[0] == pytest.approx(a, rel=2e-3)
    assert phi_fiber(1.3, 1.4)[0] == pytest.approx(a, rel=2e-3)


def test_sampler():
    s1 = sample_limit_measure(base_point(2), 2000, 5)
    s2 = sample_limit_measure(base_point(2), 2000, 5)
    np.testing.assert_array_equal(s1.x, s2.x)
    np.testing.assert_array_equal(s1.w, s2.w)
    np.testing.assert_allclose(np.linalg.norm(s1.w, axis=1), 1)
    # uniform sphere: the squared last coordinate has mean 1/3
    assert np.mean(s1.w[:, 2] ** 2) == pytest.approx(1 / 3, abs=0.03)
    # the density is even in x
    assert np.mean(s1.x) == pytest.approx(0, abs=0.03)
    assert s1.neglected_mass < 1e-3


def test_unfolding_zero_function():
    # no Gram matrix of determinant one lies within 0.1 of 2I
    res = unfolding_check(GramBump(2 * np.eye(3), 0.1), 2000, 0)
    assert res.lhs == 0 and res.rhs == 0


def test_omega_fiber_normalised():
    assert omega_fiber(np.eye(3), 0.0, 1.0)[0] == pytest.approx(1)
    out = mass_invariance_check([np.eye(3)], 4000, 1)
    assert out[0].mass > 0 and out[0].se > 0
