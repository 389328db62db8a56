import json
import random
from fractions import Fraction

from hypothesis import given, strategies as st

from shavlab.exact_core import (AffineMap, Dyadic, PLMap, X0, X1, ball, bs_reduce, evaluate_word_affine,
                                f_word_to_map, log_slope_separation, normal_form_to_affine, parse_word,
                                random_f_word, translation)

letters = st.lists(st.tuples(st.sampled_from("td"), st.integers(-4, 4).filter(bool)), max_size=25)
dyadics = st.builds(Dyadic, st.integers(-10 ** 6, 10 ** 6), st.integers(-12, 12))
f_words = st.lists(st.sampled_from(["x0", "x1", "X0", "X1"]), max_size=9)


@given(dyadics, dyadics)
def test_dyadic_matches_fraction(a, b):
    fa, fb = a.to_fraction(), b.to_fraction()
    assert (a + b).to_fraction() == fa + fb
    assert (a - b).to_fraction() == fa - fb
    assert (a * b).to_fraction() == fa * fb
    assert (a < b) == (fa < fb)
    assert (a == b) == (fa == fb)


def test_dyadic_value_convention():
    assert Dyadic(3, 2).to_fraction() == Fraction(3, 4)
    assert Dyadic(6, 3) == Dyadic(3, 2)
    assert Dyadic(8, 0).is_integer()


@given(letters)
def test_normal_form_evaluates_like_the_word(word):
    nf = bs_reduce(word)
    assert normal_form_to_affine(nf) == evaluate_word_affine(word)
    assert nf.p % 2 == 1 or (nf.p == 0 and nf.i == 0)


def test_conjugation_relation_doubles_translation():
    # x -> 2(x/2 + 1)... d t d^-1 is translation by 2
    assert bs_reduce("d t D") == bs_reduce("t^2")
    assert evaluate_word_affine("d t D") == AffineMap(0, Dyadic(2))
    assert bs_reduce("d T D") == bs_reduce("T^2")


def test_parse_word_capitals_invert():
    assert parse_word("t D^2 T^3") == [("t", 1), ("d", -2), ("t", -3)]


@given(f_words)
def test_group_laws_in_F(word):
    h = f_word_to_map(word)
    assert (h @ h.inverse()).is_identity()
    assert (h.inverse() @ h).is_identity()
    assert h.in_F()
    assert PLMap.from_json(h.to_json()) == h
    json.loads(h.to_json())


@given(f_words, f_words, f_words)
def test_associativity(a, b, c):
    A, B, C = (f_word_to_map(w) for w in (a, b, c))
    assert (A @ B) @ C == A @ (B @ C)


@given(f_words, st.fractions(0, 1).filter(lambda q: q.denominator & (q.denominator - 1) == 0))
def test_composition_pointwise(word, q):
    h = f_word_to_map(word)
    x = Dyadic(q.numerator, q.denominator.bit_length() - 1)
    g = X0 @ h
    assert g(x) == X0(h(x))


def test_slope_separation_on_random_pairs():
    rng = random.Random(5)
    for _ in range(100):
        a = f_word_to_map(random_f_word(rng, 6))
        b = f_word_to_map(random_f_word(rng, 6))
        if a != b:
            assert log_slope_separation(a, b) >= 1
        else:
            assert log_slope_separation(a, b) == 0


def test_ball_sizes():
    assert len(ball(1)) == 5
    assert len(ball(4)) == 161


def test_translation_is_not_in_F():
    assert not translation(Dyadic(1, 1)).in_F()
    assert X1.in_F()
