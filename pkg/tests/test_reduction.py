import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from latorbit.reduction import gram_to_cholesky2, lagrange_gram, lll, successive_minima


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_lagrange_reduces_and_keeps_orientation(seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(20, 2, 2)) * rng.uniform(0.1, 10, (20, 1, 1))
    B[np.linalg.det(B) < 0, 0] *= -1
    G = np.einsum("kij,klj->kil", B, B)
    Gr, U = lagrange_gram(G)
    assert np.all(np.rint(np.linalg.det(U.astype(float))) == 1)
    Br = np.einsum("kij,kjl->kil", U.astype(float), B)
    np.testing.assert_allclose(np.einsum("kij,klj->kil", Br, Br), Gr, rtol=1e-9, atol=1e-9)
    a, b, c = Gr[:, 0, 0], Gr[:, 0, 1], Gr[:, 1, 1]
    assert np.all(2 * np.abs(b) <= a * (1 + 1e-9))
    assert np.all(a <= c * (1 + 1e-9))
    L = gram_to_cholesky2(Gr)
    np.testing.assert_allclose(np.einsum("kij,klj->kil", L, L), Gr, rtol=1e-9, atol=1e-9)


def test_lll_unimodular_and_minima():
    rng = np.random.default_rng(5)
    B = np.array([[1.0, 0, 0], [0, 1, 0], [0, 0, 1]])
    U0 = np.array([[1, 4, 7], [0, 1, 3], [0, 0, 1]])
    Bred, U = lll(U0 @ B)
    assert round(np.linalg.det(U)) == 1
    np.testing.assert_allclose(np.sort(np.linalg.norm(Bred, axis=1)), [1, 1, 1])
    lam = successive_minima(np.array([[1.0, 0, 0], [0.3, 2, 0]]))
    np.testing.assert_allclose(lam, [1, np.hypot(0.3, 2)])
    X = rng.normal(size=(3, 3))
    Bred, U = lll(X)
    np.testing.assert_allclose(U @ X, Bred, atol=1e-9)
