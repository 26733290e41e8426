import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latorbit.errors import DegenerateInputError
from latorbit.linalg import (a_mat, block_iwasawa, check_special_linear, covolume, embed_block, h_element,
                             h_mul, hs_norm, random_rotation, random_sl, skew_blocks, sphere_action, u_mat)

seeds = st.integers(0, 2**31 - 1)


def test_norm_examples():
    assert hs_norm(np.eye(3)) == pytest.approx(math.sqrt(3))
    assert hs_norm([[1, 1], [0, 1]]) == pytest.approx(math.sqrt(3))
    assert hs_norm(a_mat(2, 4.0)) == pytest.approx(math.sqrt(16.5))


def test_iwasawa_examples():
    rng = np.random.default_rng(1)
    k = random_rotation(3, rng)
    it = block_iwasawa(k)
    np.testing.assert_allclose(it.gblock, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(it.v, 0, atol=1e-12)
    np.testing.assert_allclose(it.k, k, atol=1e-12)
    # lower-triangular q: an element of H is already in block form
    q = np.array([[1, 0], [3, 1]])
    g = u_mat([0.5, -1]) @ a_mat(2, 2.0) @ embed_block(q)
    it = block_iwasawa(g)
    np.testing.assert_allclose(it.gblock, 2 ** -0.5 * q, atol=1e-12)
    np.testing.assert_allclose(it.k, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(it.v, g[2, :2], atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(seeds, st.sampled_from([2, 3, 4]))
def test_iwasawa_roundtrip(seed, n):
    g = random_sl(n, np.random.default_rng(seed), 0.7)
    it = block_iwasawa(g)
    np.testing.assert_allclose(it.lower() @ it.k, g, atol=1e-10)
    np.testing.assert_allclose(it.k @ it.k.T, np.eye(n), atol=1e-12)
    assert np.linalg.det(it.k) > 0
    assert np.all(np.diag(it.gblock) > 0)
    assert np.allclose(np.triu(it.gblock, 1), 0)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_skew_blocks_preserve_norm(seed):
    rng = np.random.default_rng(seed)
    g1, g2 = random_sl(3, rng, 0.5), random_sl(3, rng, 0.5)
    A1, v1, A2, v2 = skew_blocks(g1, g2)
    L1 = np.zeros((3, 3))
    L1[:2, :2], L1[2, :2], L1[2, 2] = A1, v1, 1 / np.linalg.det(A1)
    L2 = np.zeros((3, 3))
    L2[:2, :2], L2[2, :2], L2[2, 2] = A2, v2, 1 / np.linalg.det(A2)
    for _ in range(5):
        h = random_sl(3, rng, 0.8)
        assert hs_norm(np.linalg.solve(g1, h) @ g2) == pytest.approx(hs_norm(L1 @ h @ L2), rel=1e-10)


def test_h_mul_example_and_identity():
    I = np.eye(2, dtype=int)
    h = h_mul(h_element([1, 0], 4, I), h_element([0, 1], 1, I))
    np.testing.assert_allclose(h.v, [1, 8])
    assert h.t == 4
    x = h_element([0.3, -2], 2.5, [[2, 1], [1, 1]])
    y = h_mul(x, h_element([0, 0], 1, I))
    np.testing.assert_allclose(y.v, x.v)
    np.testing.assert_array_equal(y.q, x.q)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_h_mul_matches_matrices(seed):
    rng = np.random.default_rng(seed)
    qs = [np.array(q) for q in ([[1, 1], [0, 1]], [[0, -1], [1, 0]], [[2, 1], [1, 1]], [[1, 0], [-3, 1]])]
    h1 = h_element(rng.normal(size=2), rng.uniform(0.1, 10), qs[rng.integers(4)])
    h2 = h_element(rng.normal(size=2), rng.uniform(0.1, 10), qs[rng.integers(4)])
    P = h1.matrix() @ h2.matrix()
    np.testing.assert_allclose(h_mul(h1, h2).matrix(), P, atol=1e-12 * max(1, np.abs(P).max()))


def test_h_element_guards():
    with pytest.raises(DegenerateInputError):
        h_element([0, 0], 1, [[2, 0], [0, 1]])
    with pytest.raises(DegenerateInputError):
        h_element([0, 0], -1, np.eye(2, dtype=int))


def test_sphere_action():
    w = np.array([1.0, 0, 0])
    np.testing.assert_allclose(sphere_action(w, np.eye(3)), w)
    np.testing.assert_allclose(sphere_action(w, u_mat([1, 2])), np.array([1, 0, -1]) / math.sqrt(2))
    rng = np.random.default_rng(0)
    k = random_rotation(3, rng)
    np.testing.assert_allclose(sphere_action(w, k), w @ k, atol=1e-12)
    g, h = random_sl(3, rng), random_sl(3, rng)
    # right action: (w.g).h = w.(gh)
    np.testing.assert_allclose(sphere_action(sphere_action(w, g), h), sphere_action(w, g @ h), atol=1e-12)


def test_covolume():
    assert covolume(np.eye(2, 3)) == pytest.approx(1)
    assert covolume([[1, 0, 0], [0, 2, 0]]) == pytest.approx(2)
    rng = np.random.default_rng(3)
    B = rng.normal(size=(2, 3))
    assert covolume(B @ random_rotation(3, rng)) == pytest.approx(covolume(B), rel=1e-12)
    with pytest.raises(DegenerateInputError):
        covolume([[1, 0, 0], [2, 0, 0]])


def test_special_linear_check():
    with pytest.raises(DegenerateInputError):
        check_special_linear(np.diag([2.0, 1, 1]))
    with pytest.raises(DegenerateInputError):
        check_special_linear(np.ones((2, 3)))
