import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from hplab.specfun import (bessel_j, bessel_j_orders, bessel_j_prime, bessel_jy_orders, bessel_y,
                           bessel_y_prime, hankel1, hankel1_ratio, hankel1_ratio_orders)

# Reference values computed offline with mpmath at 40 digits.
FROZEN = [
    # n, x, J_n(x), Y_n(x)
    (0, 1.0, 0.76519768655796655145, 0.088256964215676957983),
    (1, 1.0, 0.44005058574493351596, -0.78121282130028871655),
    (3, 7.5, -0.25806091319346031166, 0.1597075919379351151),
    (10, 7.5, 0.038998257889412210093, -1.2769419280524374718),
    (50, 30.0, 2.0581656631564178102e-8, -386759.32602734734359),
    (0, 200.0, -0.015437439930565091592, -0.054265775249817910694),
    (120, 150.0, 0.07045550047386770271, -0.045897773238412778134),
    (5, 0.1, 2.6030817909644415564e-9, -24461484.502303908563),
    (40, 2.0, 1.1960774581136800271e-48, -6.6615412355271833569e45),
]


@pytest.mark.parametrize("n,x,j,y", FROZEN)
def test_frozen_values(n, x, j, y):
    assert bessel_j(n, x) == pytest.approx(j, rel=1e-10)
    assert bessel_y(n, x) == pytest.approx(y, rel=1e-10)


def test_small_argument_limit():
    assert abs(bessel_j(0, 1e-8) - 1.0) <= 1e-15


def test_ratio_at_one():
    expected = complex(-0.45132418653400870397, 1.0729845872563194411)
    assert abs(hankel1_ratio(0, 1.0) - expected) < 1e-12
    h0 = complex(bessel_j(0, 1.0), bessel_y(0, 1.0))
    h1 = complex(bessel_j(1, 1.0), bessel_y(1, 1.0))
    assert abs(hankel1_ratio(0, 1.0) + h1 / h0) < 1e-13


def test_ratio_higher_order():
    expected = complex(-0.06167565410615890706, 0.81738072172990278054)
    assert abs(hankel1_ratio(7, 12.0) - expected) < 1e-12


def test_ratio_large_argument_tends_to_i():
    assert abs(hankel1_ratio(0, 50.0) - 1j) < 0.05


def test_wronskian_spec_point():
    n, x = 3, 7.5
    w = bessel_j(n, x) * bessel_y_prime(n, x) - bessel_j_prime(n, x) * bessel_y(n, x)
    assert w == pytest.approx(2.0 / (math.pi * x), rel=1e-12)


@given(x=st.floats(0.1, 200.0), frac=st.floats(0.0, 1.0))
def test_wronskian_property(x, frac):
    n = int(frac * (math.ceil(x) + 40))
    w = bessel_j(n, x) * bessel_y_prime(n, x) - bessel_j_prime(n, x) * bessel_y(n, x)
    assert w == pytest.approx(2.0 / (math.pi * x), rel=1e-10)


@given(x=st.floats(0.5, 200.0), n=st.integers(1, 60))
def test_recurrence_property(x, n):
    j = bessel_j_orders(n + 1, x)
    lhs = j[n - 1] + j[n + 1]
    rhs = 2 * n / x * j[n]
    scale = max(abs(j[n - 1]), abs(j[n + 1]), abs(rhs))
    # away from zeros of J_n the relative form holds; near zeros compare to the scale
    assert abs(lhs - rhs) <= 1e-9 * scale


@given(kR=st.floats(0.2, 300.0), n=st.integers(-400, 400))
def test_dtn_symbol_signs(kR, n):
    r = hankel1_ratio(n, kR)
    assert -r.real > 0
    assert r.imag >= 0


@given(kR=st.floats(0.2, 100.0), n=st.integers(0, 150))
def test_ratio_parity(kR, n):
    assert hankel1_ratio(n, kR) == hankel1_ratio(-n, kR)


def test_against_mpmath_grid():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(40):
        x = float(rng.uniform(0.1, 200.0))
        n_max = int(x + 40 * x ** (1 / 3) + 40)
        n = int(rng.integers(0, n_max + 1))
        j = bessel_j(n, x)
        ref = float(mpmath.besselj(n, x))
        if ref != 0:
            worst = max(worst, abs(j - ref) / abs(ref))
    assert worst <= 1e-10


def test_orders_vectorised_match_scalar():
    x = np.array([0.3, 4.0, 55.0])
    j, y = bessel_jy_orders(20, x)
    for i, xi in enumerate(x):
        assert j[7, i] == pytest.approx(bessel_j(7, xi), rel=1e-13)
        assert y[7, i] == pytest.approx(bessel_y(7, xi), rel=1e-13)


def test_hankel_is_j_plus_iy():
    h = hankel1(4, 3.3)
    assert h == pytest.approx(complex(bessel_j(4, 3.3), bessel_y(4, 3.3)))


def test_ratio_orders_match_mpmath_without_overflow():
    x = 5.0
    r = hankel1_ratio_orders(400, x)
    assert np.all(np.isfinite(r))
    n = 300
    # H_n'/H_n ~ -n/x deep in the evanescent zone
    assert r[n].real == pytest.approx(-n / x, rel=0.01)
    ref = mpmath.diff(lambda t: mpmath.hankel1(30, t), x) / mpmath.hankel1(30, x)
    assert abs(r[30] - complex(ref)) < 1e-10 * abs(complex(ref))


@pytest.mark.parametrize("x", [0.0, -1.0, float("nan")])
def test_domain_errors(x):
    with pytest.raises(ValueError):
        bessel_j(0, x)


def test_negative_order_rejected():
    with pytest.raises(ValueError):
        bessel_j(-1, 1.0)


def test_overflow_signal():
    with pytest.raises(OverflowError):
        bessel_y(400, 0.5)
