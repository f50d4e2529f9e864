"""Exact rational exponent algebra."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from blowuplab import exponents_for, check_admissible


def test_critical_case_values():
    e = exponents_for(7, 0)
    assert e.s_eps == Fraction(12, 5)
    assert e.q_nittka == Fraction(14, 9)
    assert e.r_nittka == 0
    rep = check_admissible(e)
    assert rep.admissible
    assert rep.critical_case


def test_frozen_rational_values():
    # high-precision oracle: tests/oracles/exponent_identities.py
    e = exponents_for(7, Fraction(1, 100))
    assert e.s_eps == Fraction(247, 100)
    assert e.q_nittka == Fraction(1729, 1094)
    assert e.r_nittka == Fraction(247, 119427)

    e8 = exponents_for(8, Fraction(1, 1000))
    assert e8.q_nittka == Fraction(7024, 4381)
    assert e8.r_nittka == Fraction(2634, 14022509)


def test_large_eps_stays_admissible():
    # the q < n/2 margin is a positive rational for every eps >= 0, so even
    # an absurdly supercritical eps = 10 passes the gate
    e = exponents_for(7, 10)
    assert e.q_nittka == Fraction(1267, 377)
    assert 2 * e.q_nittka < 7
    assert check_admissible(e).admissible


def test_identities_hold_exactly_over_the_required_range():
    for n in range(7, 13):
        for k in range(0, 7):
            eps = Fraction(0) if k == 0 else Fraction(1, 10**k)
            e = exponents_for(n, eps)
            r1, r2 = e.identity_residuals()
            assert r1 == 0 and r2 == 0, (n, eps)
            assert check_admissible(e).admissible


@given(n=st.integers(min_value=7, max_value=30),
       num=st.integers(min_value=0, max_value=10**6),
       den=st.integers(min_value=1, max_value=10**6))
@settings(max_examples=80, deadline=None)
def test_identities_and_margins_for_random_rationals(n, num, den):
    e = exponents_for(n, Fraction(num, den))
    r1, r2 = e.identity_residuals()
    assert r1 == 0 and r2 == 0
    rep = check_admissible(e)
    assert rep.upper_margin > 0                  # q < n/2 always
    assert rep.lower_margin >= 0
    assert (rep.r_margin > 0) or (e.eps == 0 and rep.r_margin == 0)


def test_input_validation():
    with pytest.raises(ValueError):
        exponents_for(2, 0)
    with pytest.raises(ValueError):
        exponents_for(7, -1)
    with pytest.raises(TypeError):
        exponents_for(7, 0.1)       # inexact floats are refused
    with pytest.raises(ValueError):
        exponents_for(7.0, 0)


def test_string_rationals_accepted():
    e = exponents_for(7, "1/100")
    assert e.eps == Fraction(1, 100)
