import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shavlab.exact_core import Dyadic, PLMap, X0, X1, f_word_to_map, random_f_word
from shavlab.smooth_embed import (NoInteriorFixedPoint, ProfileInvalid, bar_map, build_generator,
                                  condition_b_point, embed_word, theta_f, verify_condition_b)

f_words = st.lists(st.sampled_from(["x0", "x1", "X0", "X1"]), min_size=1, max_size=7)


def test_generator_basics(generator):
    f = generator
    assert float(f(0.0)) == 0.0
    assert float(f(1.0)) == pytest.approx(2.0, abs=1e-14)
    assert float(f.deriv(0.0)) == pytest.approx(1.0, abs=1e-12)
    assert float(f(0.3 + 1)) == pytest.approx(float(f(0.3)) + 2, abs=1e-14)
    assert 0 < f.z < 1 and float(f(f.z)) == pytest.approx(f.z, abs=1e-14)
    assert f.C == pytest.approx(math.log(float(f.deriv(f.z))))
    assert f.C > 0


@given(st.floats(-3, 3))
def test_inverse_round_trip(generator, x):
    assert float(generator.inverse(generator(x))) == pytest.approx(x, abs=1e-13)


def test_profiles_rejected():
    with pytest.raises(ProfileInvalid):
        build_generator("trig", r=3)
    with pytest.raises(NoInteriorFixedPoint):
        build_generator("single_bump")


def test_bar_map_on_integers_and_halves(generator):
    f = generator
    assert bar_map(Dyadic(3), f) == 3.0
    # 1/2 -> f^{-1}(1)
    assert bar_map(Dyadic(1, 1), f) == pytest.approx(float(f.inverse(1.0)), abs=1e-15)


def test_theta_identity(generator):
    H = theta_f(PLMap.identity(), generator)
    t = np.linspace(0, 1, 101)
    assert np.max(np.abs(H(t) - t)) == 0.0


def test_theta_of_x0_conjugates_pieces(generator):
    """theta(x0) agrees with f^{-q} T_p f^{q+n} piece by piece."""
    H = theta_f(X0, generator)
    for (lo, hi), (p, q, n) in H.piece_table():
        a = 0.0 if lo == -math.inf else lo
        b = 1.0 if hi == math.inf else hi
        a, b = max(a, 0.0), min(b, 1.0)
        if a >= b:
            continue
        t = np.linspace(a, b, 7)[1:-1]
        ref = generator.iterate(generator.iterate(t, q + n) + p, -q)
        assert np.max(np.abs(H(t) - ref)) < 1e-13


@given(f_words, f_words)
def test_homomorphism(generator, a, b):
    A, B = f_word_to_map(a), f_word_to_map(b)
    t = np.linspace(0, 1, 61)
    lhs = theta_f(A @ B, generator)(t)
    rhs = theta_f(A, generator)(theta_f(B, generator)(t))
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


@given(f_words)
def test_endpoint_derivatives(generator, w):
    H = embed_word(w, generator)
    assert float(H.derivative(0.0)) == pytest.approx(1.0, abs=1e-9)
    assert float(H.derivative(1.0, side="left")) == pytest.approx(1.0, abs=1e-9)


def test_condition_b_on_random_elements(generator):
    rng = random.Random(3)
    done = 0
    while done < 15:
        w = random_f_word(rng, 6, 1)
        h = f_word_to_map(w)
        if h.is_identity():
            continue
        wit = verify_condition_b(h, generator, "".join(w))
        assert wit.value >= generator.C - 1e-6
        done += 1


def test_condition_b_point_value(generator):
    # the conjugated fixed point carries |log theta'| = |n| C exactly
    x, n, w = condition_b_point(X0, generator)
    H = theta_f(X0, generator)
    assert abs(float(H.log_derivative(w))) == pytest.approx(abs(n) * generator.C, rel=1e-9)


def test_condition_b_rejects_identity(generator):
    with pytest.raises(ValueError):
        condition_b_point(PLMap.identity(), generator)
