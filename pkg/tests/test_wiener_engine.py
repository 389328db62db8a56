import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracle_values import ORACLES
from shavlab.holder_analysis import SampledDiffeo
from shavlab.wiener_engine import (I_UPPER, M1_LOWER, RngConfig, c4_from, cylinder_mc, cylinder_probability,
                                   dump_paths, endpoint_slopes, holder_support_check, increment_table_stats,
                                   load_paths, map_A, map_B, moment_stats, run_mc, sample_paths, time_grid,
                                   time_reverse)


def test_paths_shape_and_variance():
    x = sample_paths(64, 20_000, RngConfig(seed=1).generator())
    assert x.shape == (20_000, 65) and np.all(x[:, 0] == 0)
    assert np.var(x[:, -1]) == pytest.approx(1.0, abs=0.05)
    assert np.var(x[:, 32]) == pytest.approx(0.5, abs=0.03)


def test_time_reverse_involution():
    x = sample_paths(16, 5, RngConfig(seed=2).generator())
    assert np.allclose(time_reverse(time_reverse(x)), x)
    assert np.all(time_reverse(x)[:, 0] == 0)


@pytest.mark.parametrize("kind", ["positions", "increments"])
def test_cylinder_probability_matches_mc(kind):
    times, lo, hi = (0.25, 0.5, 1.0), (-0.5, -0.6, -1.0), (0.5, 0.8, 0.7)
    exact = cylinder_probability(times, lo, hi, kind)
    mc = cylinder_mc(times, lo, hi, 100_000, RngConfig(seed=3).generator(), kind)
    assert abs(mc.estimate - exact) < 4 * mc.stderr


def test_cylinder_single_time_closed_form():
    assert cylinder_probability((1.0,), (-1.0,), (1.0,)) == pytest.approx(math.erf(1 / math.sqrt(2)))
    with pytest.raises(ValueError):
        cylinder_probability((0.5, 0.2), (0, 0), (1, 1))


def test_B_of_linear_path_slopes():
    x = time_grid(1024)
    q = map_B(x, "gregory")
    d0, d1 = ORACLES["q_slopes_c1"]
    assert q.derivs[0] == pytest.approx(d0, rel=1e-11)
    assert q.derivs[-1] == pytest.approx(d1, rel=1e-11)
    qt = map_B(x)
    assert abs(qt.derivs[0] - d0) < 1e-6          # trapezoid is second order


@given(st.integers(0, 10_000))
def test_A_B_round_trips(seed):
    x = sample_paths(256, 1, RngConfig(seed=seed).generator())[0]
    assert np.max(np.abs(map_A(map_B(x)) - x)) < 1e-12
    t = time_grid(1024)
    q = SampledDiffeo(t, np.expm1(t) / math.expm1(1), np.exp(t) / math.expm1(1))
    assert np.max(np.abs(map_B(map_A(q), "gregory").values - q.values)) < 1e-9


def test_endpoint_slopes_vectorised():
    x = sample_paths(128, 8, RngConfig(seed=4).generator())
    d0, d1, e = endpoint_slopes(x)
    for i in range(8):
        q = map_B(x[i])
        assert d0[i] == pytest.approx(q.derivs[0]) and d1[i] == pytest.approx(q.derivs[-1])


def test_run_mc_worker_independent():
    fn = moment_stats(lmax=2, exp_pairs=((1.0, 1),))
    a = run_mc(fn, 30_000, 128, RngConfig(seed=9), batch=5000, workers=1)
    b = run_mc(fn, 30_000, 128, RngConfig(seed=9), batch=5000, workers=3)
    assert {k: (v.estimate, v.stderr) for k, v in a.items()} == {k: (v.estimate, v.stderr) for k, v in b.items()}


def test_moment_inequalities_small_sample():
    r = run_mc(moment_stats(lmax=3), 40_000, 256, RngConfig(seed=10))
    m1 = r["M1_side0"]
    assert M1_LOWER - 3 * m1.stderr <= m1.estimate <= math.exp(0.5)
    for l in (1, 2, 3):
        e = r[f"M{l}_side0"]
        assert e.estimate <= math.exp(l * l / 2) + 3 * e.stderr
        d = r[f"M{l}_diff"]
        assert abs(d.estimate) < 4 * d.stderr
    assert r["I"].estimate <= I_UPPER + 3 * r["I"].stderr
    e = r["exp_s1.0_l2"]
    assert abs(e.estimate - math.e ** 2) < 4 * e.stderr
    assert c4_from(1, 2, 3) == 7


def test_time_reversal_table():
    r = run_mc(increment_table_stats(), 40_000, 128, RngConfig(seed=12))
    for k, v in r.items():
        if k.startswith("diff_"):
            assert abs(v.estimate) <= 4 * v.stderr + 1e-15


def test_holder_support_sweep():
    a = holder_support_check(1 / 3, 100)
    b = holder_support_check(2 / 3, 100)
    assert a.bounded_fraction >= 0.9
    assert all(g > 1 for g in b.growth_factors)


def test_dump_and_load(tmp_path):
    x = sample_paths(32, 4, RngConfig(seed=13).generator())
    dump_paths(tmp_path / "p.bin", x, 32, 13)
    y, meta = load_paths(tmp_path / "p.bin")
    assert np.array_equal(x, y) and meta["seed"] == 13
