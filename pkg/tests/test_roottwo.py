"""Exact Q(sqrt 2) arithmetic: signs, ordering, powers, approximation."""

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from densitylab.errors import DomainError
from densitylab.roottwo import SQRT2, QuadValue, half_power, sqrt2_power

rationals = st.fractions(min_value=-4, max_value=4, max_denominator=32)


def test_sign_cases():
    assert QuadValue(F(3), F(-2)).sign() == 1  # 9 > 8
    assert QuadValue(F(1), F(-1)).sign() == -1  # 1 < 2
    assert QuadValue(F(-3), F(2)).sign() == -1
    assert QuadValue(F(-1), F(1)).sign() == 1
    assert QuadValue(F(0), F(0)).sign() == 0
    assert QuadValue(F(5), F(1)).sign() == 1
    assert QuadValue(F(-5), F(-1)).sign() == -1


def test_ordering_against_rationals():
    assert 1 < SQRT2 < F(3, 2)
    assert SQRT2 > F(7, 5) and SQRT2 < F(17, 12)
    assert -SQRT2 < -F(7, 5)


def test_arithmetic_identities():
    assert (1 + SQRT2) * (SQRT2 - 1) == 1
    assert SQRT2 * SQRT2 == QuadValue(F(2), F(0))
    assert 1 / (1 + SQRT2) == SQRT2 - 1
    assert (3 - 2 * SQRT2) + (2 * SQRT2 - 3) == 0
    assert abs(1 - SQRT2) == SQRT2 - 1


def test_division_by_zero_quad():
    with pytest.raises(ZeroDivisionError):
        SQRT2 / QuadValue(F(0), F(0))


def test_powers():
    assert sqrt2_power(0) == F(1)
    assert sqrt2_power(2) == F(2)
    assert sqrt2_power(-2) == F(1, 2)
    assert sqrt2_power(1) == SQRT2
    assert sqrt2_power(3) == QuadValue(F(0), F(2))
    assert sqrt2_power(-1) == QuadValue(F(0), F(1, 2))
    assert half_power(0) == F(1)
    assert half_power(2) == F(1, 2)
    assert half_power(4) == F(1, 4)
    assert half_power(1) == QuadValue(F(0), F(1, 2))
    with pytest.raises(DomainError):
        half_power(-1)


@given(n=st.integers(min_value=0, max_value=40))
@settings(max_examples=40, deadline=None)
def test_half_power_squares_exactly(n):
    v = QuadValue(F(0), F(0)) + half_power(n)
    assert v * v == F(1, 1 << n)
    assert v.sign() == 1


@given(a=rationals, b=rationals)
@settings(max_examples=80, deadline=None)
def test_sign_agrees_with_squared_comparison(a, b):
    v = QuadValue(a, b)
    s = v.sign()
    # (a + b sqrt2) and (a - b sqrt2) multiply to a^2 - 2 b^2
    conj = QuadValue(a, -b)
    prod = (v * conj).as_fraction()
    if s == 0:
        assert a == 0 and b == 0
    else:
        assert (v * v).sign() == 1
        assert conj.sign() * s == ((prod > 0) - (prod < 0))


@given(
    a=rationals,
    b=rationals,
    n=st.integers(min_value=0, max_value=24),
)
@settings(max_examples=80, deadline=None)
def test_approx_error_bound(a, b, n):
    v = QuadValue(a, b)
    r = v.approx(n)
    assert abs(v - r) <= F(1, 1 << n)


def test_rational_extraction_and_json():
    assert QuadValue(F(5, 3), F(0)).as_fraction() == F(5, 3)
    with pytest.raises(DomainError):
        SQRT2.as_fraction()
    payload = QuadValue(F(1, 3), F(-2, 7)).to_json()
    assert QuadValue.from_json(payload) == QuadValue(F(1, 3), F(-2, 7))
