import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from htem.special import MAX_BESSEL_ORDER, log_bessel_k, log_gamma_fn

mpmath.mp.dps = 40

ORDERS = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.7, 10.0, 25.5, 60.0, 110.0, 152.1]
ARGS = [1e-6, 1e-3, 0.05, 0.5, 1.0, 1.9999, 2.0, 2.5, 7.0, 30.0, 250.0, 2500.0]


def mp_log_k(nu, x):
    return float(mpmath.log(mpmath.besselk(nu, x)))


@pytest.mark.parametrize("nu", ORDERS)
@pytest.mark.parametrize("x", ARGS)
def test_log_bessel_k_matches_mpmath(nu, x):
    ref = mp_log_k(nu, x)
    got = log_bessel_k(nu, x)
    # compare K itself, i.e. absolute error on the log scale
    assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


def test_reference_values():
    assert log_bessel_k(1.0, 1.0) == pytest.approx(-0.50765, abs=1e-5)
    assert math.exp(log_bessel_k(1.0, 2.0)) == pytest.approx(0.139866, abs=1e-6)
    assert math.exp(log_bessel_k(0.5, 1.0)) == pytest.approx(math.sqrt(math.pi / 2) * math.exp(-1.0), rel=1e-14)


@pytest.mark.parametrize("nu", [0.3, 1.0, 4.5, 40.0, 120.0])
@pytest.mark.parametrize("x", [0.01, 0.7, 2.0, 9.0, 80.0])
def test_three_term_recurrence(nu, x):
    # K_{nu+1} = K_{nu-1} + (2 nu / x) K_nu
    lhs = log_bessel_k(nu + 1.0, x)
    km1 = log_bessel_k(nu - 1.0, x)
    k0 = log_bessel_k(nu, x)
    rhs = np.logaddexp(km1, math.log(2.0 * nu / x) + k0)
    assert abs(math.expm1(lhs - rhs)) < 1e-8


def test_array_broadcast():
    nus = np.array([0.5, 1.0, 7.25])
    xs = np.array([[0.1], [3.0]])
    out = log_bessel_k(nus, xs)
    assert out.shape == (2, 3)
    for i in range(2):
        for j in range(3):
            assert out[i, j] == log_bessel_k(float(nus[j]), float(xs[i, 0]))


@given(st.floats(0.0, MAX_BESSEL_ORDER), st.floats(1e-4, 500.0))
def test_symmetric_in_order(nu, x):
    assert log_bessel_k(-nu, x) == pytest.approx(log_bessel_k(nu, x), rel=1e-13, abs=1e-13)


@given(st.floats(0.0, 50.0), st.floats(1e-3, 200.0), st.floats(1e-3, 10.0))
def test_decreasing_in_argument(nu, x, dx):
    assert log_bessel_k(nu, x + dx) < log_bessel_k(nu, x)


@given(st.floats(0.0, 50.0), st.floats(0.01, 5.0), st.floats(1e-2, 50.0))
def test_increasing_in_order(nu, dnu, x):
    assert log_bessel_k(nu + dnu, x) > log_bessel_k(nu, x)


@pytest.mark.parametrize("nu, x", [(1.0, 0.0), (1.0, -1.0), (MAX_BESSEL_ORDER + 1, 1.0), (float("nan"), 1.0), (1.0, float("inf"))])
def test_bad_input_raises(nu, x):
    with pytest.raises(ValueError):
        log_bessel_k(nu, x)


@given(st.floats(1e-6, 1e4))
def test_log_gamma_matches_math(x):
    assert log_gamma_fn(x) == pytest.approx(math.lgamma(x), rel=1e-14, abs=1e-14)


def test_log_gamma_array_and_errors():
    np.testing.assert_allclose(log_gamma_fn(np.array([0.5, 3.0])), [math.log(math.sqrt(math.pi)), math.log(2.0)], rtol=1e-14)
    with pytest.raises(ValueError):
        log_gamma_fn(0.0)
    with pytest.raises(ValueError):
        log_gamma_fn(np.array([1.0, -2.0]))
