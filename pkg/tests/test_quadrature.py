import math

import numpy as np
import pytest
from scipy import integrate

from latorbit.errors import NumericFailureError
from latorbit.quadrature import tanh_sinh


def test_polynomial_and_endpoint_singularities():
    assert tanh_sinh(lambda x: x**3, 0, 2) == pytest.approx(4, rel=1e-12)
    assert tanh_sinh(lambda x: np.sqrt(x), 0, 1) == pytest.approx(2 / 3, rel=1e-10)
    assert tanh_sinh(lambda x: np.sqrt(1 - x * x), -1, 1) == pytest.approx(math.pi / 2, rel=1e-10)
    assert tanh_sinh(lambda x: 1 / np.sqrt(x), 0, 1) == pytest.approx(2, rel=1e-8)


def test_orientation_and_empty():
    assert tanh_sinh(np.exp, 1, 1) == 0
    assert tanh_sinh(np.exp, 1, 0) == pytest.approx(-(math.e - 1), rel=1e-12)


def test_matches_scipy():
    f = lambda x: np.maximum(-x**3 + 100 * x - 2, 0) ** 1 * x ** -4.0
    ref = integrate.quad(lambda x: float(f(np.array(x))), 0.0200001, 9.98997, limit=200)[0]
    assert tanh_sinh(f, 0.0200001, 9.98997) == pytest.approx(ref, rel=1e-7)


def test_failure_reported():
    with pytest.raises(NumericFailureError):
        tanh_sinh(lambda x: np.sin(1 / x) / x, 1e-9, 1, rtol=1e-14, max_level=3)
