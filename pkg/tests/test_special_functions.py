import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from oracle_values import ORACLES
from shavlab.special_functions import (RATIO_LIMIT, DomainError, H, T_n, T_ratio, check_SL4, v, v1, v1_fourier,
                                       v1_prime, v1_prime_analytic, v1_quad, verify_H_bounds, verify_SL2)


@pytest.mark.parametrize("method", ["auto", "watson", "exp_integral", "alternating"])
def test_H_against_mpmath(method):
    for y, ref in ORACLES["K0"].items():
        if method == "alternating":
            # the averaged alternating sum is accurate in absolute terms only
            assert H(y, method) == pytest.approx(ref, abs=1e-13)
        else:
            assert H(y, method) == pytest.approx(ref, rel=1e-11, abs=1e-300)


@given(st.floats(1e-8, 50))
def test_H_matches_scipy(y):
    assert H(y) == pytest.approx(special.k0(y), rel=1e-12)


def test_H_domain():
    with pytest.raises(DomainError):
        H(0.0)
    with pytest.raises(DomainError):
        H(-1.0)


def test_v1_oracles_and_routes():
    for tau, ref in ORACLES["v1"].items():
        assert float(v1(tau)) == pytest.approx(ref, rel=1e-12)
        assert v1_quad(tau) == pytest.approx(ref, rel=1e-10)
    assert v1_fourier(2.0) == pytest.approx(ORACLES["v1"][2.0], rel=1e-9)
    assert float(v1(0.0)) == pytest.approx(math.pi, abs=1e-12)


@given(st.floats(-30, 30))
def test_v1_even_and_bounded(t):
    assert float(v1(t)) == pytest.approx(float(v1(-t)), rel=1e-14)
    assert 0 < float(v1(t)) <= math.pi + 1e-12


def test_v_domain_and_value():
    assert float(v(1.0)) == pytest.approx(math.pi)
    with pytest.raises(DomainError):
        v(0.5)


@pytest.mark.parametrize("tau", [0.3, 1.0, 4.0, 40.0])
def test_v1_prime_routes_agree(tau):
    assert v1_prime(tau) == pytest.approx(float(v1_prime_analytic(tau)), rel=1e-8)


def test_SL2_bound():
    rep = verify_SL2()
    assert rep.ok
    assert rep.limit_ratios[(1, 200)] == pytest.approx(1.0, abs=0.01)


def test_H_bounds_exhibit_eps():
    rep = verify_H_bounds()
    assert rep.ok and 0 < rep.eps < 1


def test_T_n_oracles():
    for n, ref in ORACLES["T_n"].items():
        assert T_n(n) == pytest.approx(ref, rel=1e-12)
    assert T_n(1) == pytest.approx(math.pi, rel=1e-14)


def test_T_ratio_limit():
    assert RATIO_LIMIT == pytest.approx(ORACLES["ratio_limit"], rel=1e-15)
    assert abs(T_ratio(20) - RATIO_LIMIT) < 1e-3
    gaps = [abs(T_ratio(n) - RATIO_LIMIT) for n in (5, 10, 20)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_T_n_domain():
    with pytest.raises(DomainError):
        T_n(0)


def test_SL4_small_grid():
    rep = check_SL4(0.25, npts=8)
    assert rep.ok
    assert rep.c3 == pytest.approx(math.pi * rep.c_star ** 2)
    assert rep.R > rep.r
