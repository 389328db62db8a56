import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from oracle_values import ORACLES
from shavlab.partition_measures import (ChainConfig, LemmaRow, Partition, Jn, Jn_bracket, Jn_mc, equality_arguments,
                                        importance_expectation, inverse_transforms, log_lengths_from_z, log_u1n,
                                        mesh_exceeds, odd_inequality_grid, sample_un, sl6_per_k_bound,
                                        strictly_decreasing, transforms, u1n, x_from_y)
from shavlab.special_functions import v1

interiors = st.lists(st.floats(0.01, 0.99), min_size=1, max_size=6, unique=True).map(sorted).filter(
    lambda xs: all(b - a > 1e-3 for a, b in zip(xs, xs[1:])))


def test_partition_basics():
    p = Partition.uniform(4)
    assert p.n == 4 and p.mesh == pytest.approx(0.25)
    q = Partition.from_lengths([1, 2, 1])
    assert q.interior == pytest.approx((0.25, 0.75))
    with pytest.raises(ValueError):
        Partition((0.5, 0.4))


@given(interiors)
def test_transform_round_trip(xs):
    x = np.array(xs)
    T = transforms(x)
    n = x.size + 1
    assert inverse_transforms(T["z"][1:n]) == pytest.approx(x, rel=1e-12, abs=1e-14)
    assert x_from_y(T["y"][1:n]) == pytest.approx(x, rel=1e-12, abs=1e-14)


@given(interiors)
def test_density_two_routes(xs):
    x = np.array(xs)
    assert float(u1n(x, logspace=True)) == pytest.approx(float(u1n(x, logspace=False)), rel=1e-10)


def test_equality_arguments_uniform():
    # equal lengths give argument 1 and v = pi
    assert np.allclose(equality_arguments(np.array([0.25, 0.5, 0.75])), 1.0)
    assert float(log_u1n(np.array([0.5]))) == pytest.approx(2 * math.log(math.pi) + 2 * math.log(2))


def test_log_lengths_stable_for_huge_z():
    ll = log_lengths_from_z(np.array([1e6, -1e6]))
    assert np.all(np.isfinite(ll))
    assert ll[0] == pytest.approx(0.0, abs=1e-12)


def test_Jn_oracles():
    assert Jn(2) == pytest.approx(ORACLES["J2"], rel=1e-12)
    assert Jn(3) == pytest.approx(ORACLES["J3"], rel=1e-12)


def test_J2_by_one_dimensional_quadrature():
    # x = 1/(1+e^{-u}) turns J_2 into the integral of v1(|u|/2)^2 over the line
    f = lambda u: float(v1(0.5 * abs(u))) ** 2
    val = 2 * integrate.quad(f, 0, np.inf, limit=400, epsabs=1e-12)[0]
    assert val == pytest.approx(ORACLES["J2"], rel=1e-7)


def test_Jn_mc_small():
    e = Jn_mc(2, 200_000, seed=3)
    assert abs(e.z_score(ORACLES["J2"])) < 4


def test_Jn_bracket():
    rows, c1, c2 = Jn_bracket(10)
    assert 0.35 < c1 <= c2 < 0.4
    assert len(rows) == 10


def test_odd_inequality():
    assert odd_inequality_grid()


def test_sl6_per_k_bound_decreases_in_n():
    b = [sl6_per_k_bound(n, 1.05) for n in (4, 8, 16)]
    assert b[0] > b[1] > b[2] > 0


def test_strictly_decreasing_helper():
    rows = [LemmaRow(4, 0.5, 0.01, 1), LemmaRow(8, 0.4, 0.01, 1)]
    assert strictly_decreasing(rows)
    assert not strictly_decreasing(rows + [LemmaRow(16, 0.39, 0.01, 1)])


SMALL = ChainConfig(chains=32, groups=2, burn_in=200, sweeps=300, thin=2, seed=11)


def test_chain_deterministic_and_worker_independent():
    a = sample_un(3, SMALL)
    b = sample_un(3, ChainConfig(**{**SMALL.__dict__, "workers": 2}))
    assert np.array_equal(a.z, b.z)
    assert 0.2 < a.acceptance["componentwise"] < 0.7


def test_chain_agrees_with_importance_sampling():
    stat = lambda logl: np.exp(np.max(logl, axis=-1))
    a = sample_un(2, SMALL).estimate(stat)
    b = importance_expectation(stat, 2, 200_000, seed=5)
    assert abs(a.estimate - b.estimate) < 4 * math.hypot(a.stderr, b.stderr)
    half = sample_un(2, SMALL).estimate(lambda logl: np.exp(logl[..., 0]))
    assert abs(half.estimate - 0.5) < 4 * half.stderr + 1e-3


def test_mesh_statistic():
    st_ = mesh_exceeds(0.5)
    assert st_(np.log(np.array([[0.6, 0.4], [0.5, 0.5]]))).tolist() == [True, False]
