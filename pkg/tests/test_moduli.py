import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latorbit.enumeration import enumerate_sl
from latorbit.errors import DegenerateInputError
from latorbit.linalg import a_mat, embed_block, random_rotation, random_sl, u_mat
from latorbit.moduli import (act, base_point, fiber_coords, make_point, orbit_empirical, phi_weight,
                             phi_weight_operator)
from latorbit.series import series_sigma

x0 = base_point(2)


def test_make_point():
    p = make_point(np.eye(2, 3), [0, 0, 1])
    np.testing.assert_allclose(p.basis, np.eye(2, 3))
    p = make_point(2 * np.eye(2, 3), [0, 0, 1])
    np.testing.assert_allclose(p.basis, np.eye(2, 3))
    with pytest.raises(DegenerateInputError):
        make_point(np.eye(2, 3), [1, 0, 0])


def _same_lattice(B1, B2):
    U = np.linalg.lstsq(B1.T, B2.T, rcond=None)[0].T
    return np.allclose(U, np.rint(U), atol=1e-9) and abs(abs(np.linalg.det(np.rint(U))) - 1) < 1e-9


def test_act_identity_and_stabilizer():
    p = act(x0, np.eye(3))
    np.testing.assert_allclose(p.basis, x0.basis)
    rng = np.random.default_rng(0)
    q = np.array([[2, 1], [1, 1]])
    h = u_mat(rng.normal(size=2)) @ a_mat(2, 3.0) @ embed_block(q)
    # the H element rescales the lattice, which make_point undoes
    p = act(x0, h)
    np.testing.assert_allclose(p.w, x0.w, atol=1e-12)
    assert _same_lattice(p.basis, x0.basis)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_act_keeps_orthogonality_and_composes(seed):
    rng = np.random.default_rng(seed)
    g, h = random_sl(3, rng, 0.6), random_sl(3, rng, 0.6)
    p = act(x0, g)
    np.testing.assert_allclose(p.basis @ p.w, 0, atol=1e-10)
    a, b = act(p, h), act(x0, g @ h)
    np.testing.assert_allclose(a.w, b.w, atol=1e-10)
    assert _same_lattice(a.basis, b.basis)


def test_fiber_coords():
    fc = fiber_coords(x0)
    np.testing.assert_allclose(fc.rho, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(fc.eta_reduced, np.eye(2), atol=1e-12)
    rng = np.random.default_rng(4)
    g = random_sl(3, rng, 0.5)
    x = act(x0, g)
    e = fiber_coords(x).eta_reduced
    k = random_rotation(3, rng)
    np.testing.assert_allclose(fiber_coords(act(x, k)).eta_reduced, e, atol=1e-9)
    fc = fiber_coords(act(x0, embed_block(np.array([[1, 3], [0, 1]]))))
    np.testing.assert_allclose(fc.eta_reduced, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(fc.w @ fc.rho, [0, 0, 1], atol=1e-12)


def test_phi_routes():
    assert phi_weight(x0, x0, 12) == pytest.approx(series_sigma(np.eye(2), np.eye(2), 4, 12).value)
    rng = np.random.default_rng(9)
    for _ in range(5):
        x = act(x0, random_sl(3, rng, 0.4))
        assert phi_weight_operator(x0, x, 12) == pytest.approx(phi_weight(x0, x, 12), rel=1e-10)


def test_orbit_small():
    assert orbit_empirical(x0, 1.0, aggregate=False).total == 0
    emp = orbit_empirical(x0, math.sqrt(3), aggregate=False)
    # SL(3, Z) at norm sqrt(3) is the 24 signed permutation matrices of det 1
    assert emp.total == 24
    stab = np.array([g[2, 2] != 0 and not g[:2, 2].any() for g in emp.gammas])
    np.testing.assert_allclose(emp.eta[stab], np.broadcast_to(np.eye(2), (stab.sum(), 2, 2)), atol=1e-12)


def test_aggregated_matches_per_matrix():
    T = 3.2
    a = orbit_empirical(x0, T, aggregate=True)
    b = orbit_empirical(x0, T, aggregate=False)
    assert a.total == b.total == len(enumerate_sl(3, T))
    for vals in (lambda e: e.lambdas[:, 0], lambda e: e.w[:, 2] ** 2, lambda e: e.lambdas[:, 1]):
        assert a.mean(vals(a))[0] == pytest.approx(b.mean(vals(b))[0], rel=1e-10)
