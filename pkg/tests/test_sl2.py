import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latorbit.errors import PreconditionError
from latorbit.linalg import a_mat, u_mat
from latorbit.sl2 import (IrrepSpec, adjoint_matrix, embed_sl2, expansion_check_G, expansion_constant,
                          expansion_ratio, factorize_va, joint_fixed_dimension, proj_highest, rep_diag, rep_poly,
                          rep_unip)


def test_rep_examples():
    np.testing.assert_allclose(rep_diag(IrrepSpec(3), 1.0), np.eye(4))
    np.testing.assert_allclose(rep_diag(IrrepSpec(2), 4.0), np.diag([4, 1, 0.25]))
    np.testing.assert_allclose(rep_diag(IrrepSpec(1), 9.0), np.diag([3, 1 / 3]))
    np.testing.assert_allclose(rep_unip(IrrepSpec(3), 0.0), np.eye(4))
    np.testing.assert_allclose(rep_unip(IrrepSpec(2), 1.0), [[1, 0, 0], [-1, 1, 0], [0.5, -1, 1]])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.floats(-3, 3), st.floats(0.1, 10))
def test_rep_matches_polynomial_oracle(n, y, t):
    s = IrrepSpec(n, 2)
    np.testing.assert_allclose(rep_unip(s, y), rep_poly(n, [[1, 0], [-y, 1]]), atol=1e-9 * (1 + abs(y)) ** n)
    r = math.sqrt(t)
    np.testing.assert_allclose(rep_diag(s, t), rep_poly(n, np.diag([r, 1 / r])), rtol=1e-12)


def test_rep_is_homomorphism():
    rng = np.random.default_rng(1)
    g, h = rng.normal(size=(2, 2, 2))
    np.testing.assert_allclose(rep_poly(3, g @ h), rep_poly(3, g) @ rep_poly(3, h), atol=1e-10)


def test_proj_highest():
    s = IrrepSpec(2)
    x = np.array([0.0, 0.0, 5.0])
    np.testing.assert_allclose(proj_highest(s, x), [5, 0, 0])
    np.testing.assert_allclose(proj_highest(s, [1.0, 0, 0]), [0, 0, 0.5])
    for y in (-1.0, 0.3, 2.0):
        x = np.array([0.4, -1.2, 0.7])
        c = proj_highest(s, x)
        assert np.polynomial.polynomial.polyval(y, c) == pytest.approx((rep_unip(s, y) @ x)[-1])


def test_expansion_constant():
    s = IrrepSpec(1)
    c = expansion_constant(s, 1.0)
    assert c == pytest.approx(1 / math.sqrt(5), rel=1e-3)
    assert expansion_constant(s, 1.0, seed=7) == pytest.approx(c, rel=0.1)
    with pytest.raises(PreconditionError):
        expansion_constant(s, 1.0, trials=10)
    with pytest.raises(PreconditionError):
        expansion_constant(s, 2.0)


def test_expansion_ratio_bounded_below():
    s = IrrepSpec(2)
    rng = np.random.default_rng(3)
    c = expansion_constant(s, 1.0)
    for t in (1e2, 1e4):
        for _ in range(10):
            x = rng.standard_normal(3)
            assert expansion_ratio(s, t, 0.5, x) >= 0.99 * c


def test_embed_and_factorize():
    np.testing.assert_allclose(embed_sl2(1, 2, np.eye(2)), np.eye(3))
    g = embed_sl2(1, 2, [[2, 3], [5, 8]])
    assert (g[0, 0], g[0, 2], g[2, 0], g[2, 2]) == (2, 3, 5, 8)
    A, B = np.array([[1.0, 2], [0, 1]]), np.array([[1.0, 0], [-3, 1]])
    np.testing.assert_allclose(embed_sl2(2, 3, A @ B), embed_sl2(2, 3, A) @ embed_sl2(2, 3, B))
    target = np.linalg.inv(a_mat(2, 4.0)) @ np.linalg.inv(u_mat([1, 2]))
    for sigma in ([1, 2], [2, 1]):
        P = reduce(np.matmul, factorize_va(2, 4.0, [1, 2], sigma))
        np.testing.assert_allclose(P, target, atol=1e-12)
    P = reduce(np.matmul, factorize_va(3, 2.0, [0, 0, 0]))
    np.testing.assert_allclose(P, np.linalg.inv(a_mat(3, 2.0)), atol=1e-12)


def test_adjoint_and_fixed_space():
    rng = np.random.default_rng(0)
    g, h = rng.normal(size=(2, 3, 3))
    np.testing.assert_allclose(adjoint_matrix(g @ h), adjoint_matrix(g) @ adjoint_matrix(h), atol=1e-8)
    assert joint_fixed_dimension(2) == 0


def test_expansion_check_trend():
    rows = expansion_check_G("adjoint", np.eye(3), [1e-1, 1e-2], trials=200, start_points=17, max_points=33)
    assert rows[0].min_sup < rows[1].min_sup
