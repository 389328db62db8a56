import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracle_values import ORACLES
from shavlab.holder_analysis import SampledDiffeo
from shavlab.schwarzian_stats import (C_g, C_lemma9, ConstructionImpossible, R_ratio_closed, R_ratio_direct,
                                      affine_map, check_SL8, check_SL9, f1_f2_sample, full_hypothesis_partition,
                                      identity_map, log_estimates_check, mobius_map, moderate_r_check,
                                      ratio_terms, schwarzian, schwarzian_fd, sine_family, tau_beta,
                                      three_piece_partition)
from shavlab.wiener_engine import RngConfig, map_B, sample_paths


@pytest.mark.parametrize("t", [0.1, 0.25, 0.6, 0.9])
def test_schwarzian_sine_oracle(t):
    g = sine_family(0.25)
    ref = ORACLES["schwarzian_sine"][t]
    assert float(schwarzian(g, t, 1)) == pytest.approx(ref, rel=1e-12)
    assert float(schwarzian(g, t, 2)) == pytest.approx(ref, rel=1e-12)
    assert schwarzian_fd(g, t) == pytest.approx(ref, abs=1e-5)


@given(st.floats(-0.9, 3.0), st.floats(0.01, 0.99))
def test_mobius_has_zero_schwarzian(c, t):
    assert abs(float(schwarzian(mobius_map(c), t))) < 1e-9


def test_affine_and_identity_vanish():
    t = np.linspace(0, 1, 11)
    assert np.all(schwarzian(identity_map(), t) == 0)
    assert np.all(schwarzian(affine_map(2.0, 0.1), t) == 0)


def test_constants_match_oracles():
    g = sine_family(0.25)
    assert C_g(g) == pytest.approx(ORACLES["C_g_sine"], rel=1e-7)
    assert C_lemma9(g) == pytest.approx(ORACLES["C_lemma9_sine"], rel=1e-9)


def test_sine_family_rejects_large_a():
    with pytest.raises(ValueError):
        sine_family(1.0)


def test_identity_g_gives_zero_f():
    rng = RngConfig(seed=3).generator()
    qs = [map_B(p) for p in sample_paths(64, 4, rng)]
    f1, f2, X, Y = f1_f2_sample(identity_map(), np.array([0.25, 0.5, 0.75]), qs)
    assert f1 == 0 and f2 == 0


def test_f2_for_identity_q_is_integral_of_schwarzian():
    # q = id: Y_k = l_k^2 * int_0^1 S_g(x_{k-1} + l_k s) ds
    g = sine_family(0.25)
    q = SampledDiffeo.identity(4096)
    x = np.array([0.5])
    _, _, _, Y = f1_f2_sample(g, x, [q, q])
    s = np.linspace(0, 1, 200_001)
    for k, a in enumerate((0.0, 0.5)):
        ref = 0.25 * np.trapezoid(schwarzian(g, a + 0.5 * s), s)
        assert Y[k] == pytest.approx(ref, rel=1e-6)


def test_SL8_small_run():
    rep = check_SL8(sine_family(0.25), 1 / 64, 64, trials=400, m=64, rng_cfg=RngConfig(seed=5, stream=8))
    assert rep.ok and rep.frequency <= rep.bound / 10
    assert rep.mesh == pytest.approx(1 / 64)
    assert rep.var_f1 <= rep.var_f1_bound


def test_SL8_identity_is_degenerate():
    rep = check_SL8(identity_map(), 1 / 64, 16, trials=50, m=32, rng_cfg=RngConfig(seed=5, stream=8))
    assert rep.frequency == 0 and rep.var_f1 == 0 and rep.mean_abs_f2 == 0


@given(st.floats(1e-3, 0.1), st.floats(1e-3, 0.1), st.floats(-2, 2), st.floats(-2, 2))
def test_R_ratio_forms_agree(a, b, A, B):
    assert R_ratio_closed(a, b, A, B) == pytest.approx(R_ratio_direct(a, b, A, B), rel=1e-12)


def test_log_estimates():
    assert all(log_estimates_check().values())


def test_tau_beta_identity():
    t = np.linspace(1.5, 50, 50)[:, None]
    alpha = np.array([[-0.01, -1e-4, 1e-4, 0.01]])
    tau, beta = tau_beta(t, alpha)
    assert np.max(np.abs(tau + beta - np.arccosh(t * (1 + alpha)))) < 1e-12
    r = np.abs(beta) / np.abs(alpha)
    assert r.min() >= 0.25 and r.max() <= 4


def test_SL9_identity_exact():
    rep = check_SL9(0.0, 0.5, three_piece_partition(1000.0))
    assert rep.log_prod_R == 0.0 and rep.ok


def test_SL9_three_piece():
    C = C_lemma9(sine_family(0.25))
    rep = check_SL9(0.25, 0.5, three_piece_partition(8000 * (C + 1) / 0.5))
    assert rep.ok
    assert rep.hypotheses_met["minR>r"] and not rep.hypotheses_met["mesh<delta1"]
    with pytest.raises(ConstructionImpossible):
        check_SL9(0.25, 0.5, three_piece_partition(8000 * (C + 1) / 0.5), require=True)


def test_SL9_full_hypothesis():
    C = C_lemma9(sine_family(0.25))
    rep = check_SL9(0.25, 0.5, full_hypothesis_partition(C, 0.5), require=True)
    assert rep.ok and all(rep.hypotheses_met.values())
    assert all(v for v in rep.chain.values() if isinstance(v, bool))


def test_ratio_terms_equal_lengths():
    T = ratio_terms(np.log(np.full(8, 1 / 8)), 0.0)
    assert np.allclose(T["log_R"], 0.0) and np.allclose(T["log_ratio"], 0.0)


def test_moderate_r_small():
    rep = moderate_r_check(partitions=5, seed=1)
    assert rep["ok"] and rep["worst_ratio"] < 1
