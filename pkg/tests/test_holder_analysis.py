import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracle_values import ORACLES
from shavlab.exact_core import PLMap, X0, X1
from shavlab.holder_analysis import (BallTooSmall, CosineDiffeo, GroupBall, SampledDiffeo, discontinuity_chord,
                                     discontinuity_demo, holder_formula_trial, holder_quotient_sup, n_delta,
                                     p_delta, pi_delta, r_delta, theta_cutoff, translate)


def exp_diffeo(c, m=1024):
    return SampledDiffeo.from_functions(lambda t: np.expm1(c * t) / math.expm1(c),
                                        lambda t: c * np.exp(c * t) / math.expm1(c), m)


def brute_quotient(t, g, delta):
    best = 0.0
    for i in range(len(t)):
        for j in range(i + 1, len(t)):
            best = max(best, abs(g[j] - g[i]) / (t[j] - t[i]) ** delta)
    return best


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=25), st.sampled_from([0.2, 1 / 3, 0.5, 0.9]))
def test_quotient_sup_matches_brute_force(vals, delta):
    t = np.linspace(0, 1, len(vals))
    g = np.array(vals)
    assert holder_quotient_sup(t, g, delta) == pytest.approx(brute_quotient(t, g, delta), rel=1e-12, abs=1e-14)


def test_p_delta_exponential():
    assert p_delta(exp_diffeo(1.0), 1 / 3) == pytest.approx(ORACLES["p_delta_exp_c1"], abs=1e-12)
    assert p_delta(SampledDiffeo.identity(), 1 / 3) == 0.0


def test_norm_of_B_image():
    q = exp_diffeo(1.0)
    assert n_delta(q, 1 / 3) == pytest.approx(1.0, rel=1e-9)  # sup |q'(t)-q'(s)|/|t-s|^d at full lag


def test_discontinuity_chord_corrected_form():
    for eps, ref in ORACLES["chord"].items():
        assert discontinuity_chord(eps) == pytest.approx(ref, rel=1e-12)
        assert discontinuity_chord(eps, as_displayed=True) != pytest.approx(ref, rel=1e-12)


def test_discontinuity_demo_rows():
    rows = discontinuity_demo(eps_grid=(0.1, 0.01), m=800)
    for r in rows:
        assert r["norm_f_diff"] == pytest.approx(r["norm_f_closed"], rel=1e-6)
        assert r["chord"] == pytest.approx(r["chord_closed"], abs=1e-9)
    # f_eps -> f while g o f_eps stays away from g o f
    assert rows[-1]["norm_f_diff"] < rows[0]["norm_f_diff"]
    assert rows[-1]["norm_gf_diff"] > 1.0


def test_group_formulas_bound_empirical_constants():
    r = holder_formula_trial(CosineDiffeo(0.5, 1), CosineDiffeo(0.3, 2), 1 / 3)
    assert r["inverse_empirical"] <= r["inverse_formula"]
    assert r["compose_empirical"] <= r["compose_formula"]


@given(st.floats(-0.9, 0.9), st.integers(1, 3))
def test_cosine_inverse(c, k):
    f = CosineDiffeo(c, k)
    s = np.linspace(0, 1, 33)
    assert np.max(np.abs(f(f.inverse(s)) - s)) < 1e-12


def test_theta_cutoff():
    assert list(theta_cutoff([-1.0, 0.0, 0.25, 1.0, 2.0])) == [1.0, 1.0, 0.75, 0.0, 0.0]


@pytest.fixture(scope="module")
def small_ball(generator):
    return GroupBall(generator, radius=3, m=128)


def test_r_delta_identity_and_group_element(small_ball):
    r = r_delta(PLMap.identity(), small_ball)
    assert r.value == 0.0 and r.word == ()
    r2 = r_delta(X0 @ X1, small_ball)
    assert r2.value == 0.0 and r2.argmin == X0 @ X1


def test_r_delta_boundary_detection(generator):
    ball = GroupBall(generator, radius=1, m=64)
    with pytest.raises(BallTooSmall):
        r_delta(X0 @ X0, ball)


def test_pi_delta_equivariance_and_range(small_ball):
    F = lambda h: math.sin(len(h.breakpoints))
    base = pi_delta(F, PLMap.identity(), small_ball)
    moved = pi_delta(translate(F, X1), X1, small_ball)
    assert moved.value == pytest.approx(base.value, abs=1e-14)
    assert abs(sum(base.weights.values()) - 1) < 1e-12
    one = pi_delta(lambda h: 1.0, X0, small_ball)
    assert one.value == pytest.approx(1.0)
