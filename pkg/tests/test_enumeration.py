import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latorbit.enumeration import (ResourceLimitError, count_sl, enumerate_sl, enumerate_sl_generic,
                                  growth_fit, norm2_budget, stream_sl)
from latorbit.errors import PreconditionError


def brute(n, T):
    """Vectorised exhaustive search over entries bounded by floor(T)."""
    b = int(math.floor(T))
    N2 = norm2_budget(T)
    E = np.array(list(itertools.product(range(-b, b + 1), repeat=n * n)), dtype=np.int64)
    E = E[(E * E).sum(axis=1) <= N2].reshape(-1, n, n)
    d = np.rint(np.linalg.det(E.astype(float))).astype(int)
    return E[d == 1]


def test_small_shells():
    assert count_sl(2, 1) == 0
    assert count_sl(2, 1.4) == 0
    assert count_sl(2, 1.5) == 4
    assert count_sl(2, math.sqrt(2)) == 4
    assert count_sl(2, math.sqrt(3)) == 20
    assert count_sl(2, 1.7320508) == 20
    four = {tuple(g.ravel()) for g in enumerate_sl(2, math.sqrt(2))}
    assert four == {(1, 0, 0, 1), (-1, 0, 0, -1), (0, 1, -1, 0), (0, -1, 1, 0)}


@pytest.mark.parametrize("n,T", [(2, 2.0), (2, 2.5), (2, 3.2), (3, 1.8), (3, 2.0), (3, 2.3)])
def test_matches_brute_force(n, T):
    ref = {tuple(g.ravel()) for g in brute(n, T)}
    got = {tuple(g.ravel()) for g in enumerate_sl(n, T)}
    assert got == ref
    assert count_sl(n, T) == len(ref)


@pytest.mark.parametrize("n,T", [(2, 7.5), (3, 3.5), (3, 4.2)])
def test_generic_route_agrees(n, T):
    np.testing.assert_array_equal(enumerate_sl(n, T), enumerate_sl_generic(n, T))


def test_n4_generic():
    M = enumerate_sl(4, 2.3)
    assert M.shape == (4800, 4, 4)
    assert np.all(np.rint(np.linalg.det(M.astype(float))) == 1)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3]), st.floats(1.0, 4.0))
def test_enumeration_invariants(n, T):
    M = enumerate_sl(n, T)
    if M.shape[0]:
        assert np.all(np.rint(np.linalg.det(M.astype(float))) == 1)
        assert np.all((M * M).sum(axis=(1, 2)) <= norm2_budget(T))
        flat = M.reshape(len(M), -1)
        assert all(tuple(a) < tuple(b) for a, b in zip(flat, flat[1:]))
    assert M.shape[0] == count_sl(n, T)
    # the set is closed under g -> g^{-1}, which preserves the norm for n = 2
    if n == 2 and M.shape[0]:
        inv = {tuple(np.rint(np.linalg.inv(g)).astype(int).ravel()) for g in M}
        assert inv == {tuple(g.ravel()) for g in M}


def test_stream_preserves_order():
    M = enumerate_sl(3, 3.0)
    np.testing.assert_array_equal(np.concatenate(list(stream_sl(3, 3.0))), M)
    assert list(stream_sl(2, 1.0)) == []


def test_growth_fit_and_guards():
    f = growth_fit(2, [10, 20, 40, 60])
    assert 1.9 <= f.exponent <= 2.1
    with pytest.raises(PreconditionError):
        growth_fit(2, [10, 20, 40])
    with pytest.raises(PreconditionError):
        growth_fit(2, [1.0, 1.1, 1.2, 1.3])


def test_caps_and_bad_input():
    with pytest.raises(ResourceLimitError):
        enumerate_sl(4, 9)
    with pytest.raises(ValueError):
        enumerate_sl(5, 2)
    with pytest.raises(ValueError):
        count_sl(2, -1)
