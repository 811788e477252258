import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from epflow.kernels.bessel import EULER_GAMMA, bessel_k0, bessel_k0k1, bessel_k1, one_minus_x_k1

X = np.concatenate([np.logspace(-12, 2.8, 600), [1.999999, 2.0, 2.000001]])


def test_against_scipy():
    np.testing.assert_allclose(bessel_k0(X), special.k0(X), rtol=1e-13)
    np.testing.assert_allclose(bessel_k1(X), special.k1(X), rtol=1e-13)


@pytest.mark.parametrize("x", [1e-8, 0.01, 0.5, 1.0, 1.9, 2.0, 2.1, 7.5, 30.0, 300.0])
def test_against_mpmath(x):
    mpmath.mp.dps = 40
    k0, k1 = bessel_k0k1(np.array([x]))
    assert k0[0] == pytest.approx(float(mpmath.besselk(0, x)), rel=5e-15)
    assert k1[0] == pytest.approx(float(mpmath.besselk(1, x)), rel=5e-15)


def test_reference_values():
    assert bessel_k0(1.0) == pytest.approx(0.42102443824070834, rel=1e-15)
    assert bessel_k1(1.0) == pytest.approx(0.6019072301972346, rel=1e-15)


def test_one_minus_x_k1_small_argument():
    # 1 - x K1(x) loses every digit to cancellation if formed directly
    mpmath.mp.dps = 50
    for x in [1e-10, 1e-6, 1e-3, 0.1, 1.0, 2.0, 5.0, 40.0]:
        ref = float(1 - x * mpmath.besselk(1, x))
        assert one_minus_x_k1(np.array([x]))[0] == pytest.approx(ref, rel=1e-13, abs=1e-300)


def test_euler_gamma():
    assert EULER_GAMMA == pytest.approx(float(mpmath.euler), rel=1e-16)


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_domain(x):
    with pytest.raises(ValueError):
        bessel_k0(x)
    with pytest.raises(ValueError):
        bessel_k1(x)


@given(st.floats(1e-6, 600.0))
def test_k0_derivative_is_minus_k1(x):
    h = 1e-5 * x
    lo, hi = bessel_k0(np.array([x - h, x + h]))
    d = (hi - lo) / (2 * h)
    assert d == pytest.approx(-bessel_k1(x), rel=1e-6)


@given(st.floats(1e-300, 700.0))
def test_positive_and_ordered(x):
    k0, k1 = bessel_k0k1(np.array([x]))
    assert 0 < k0[0] < k1[0] or math.isinf(k1[0])
