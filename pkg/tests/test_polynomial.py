import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgpfk.polynomial import (
    ONE,
    Polynomial,
    evaluate_monomials,
    format_monomial,
    grevlex_key,
    mono_div,
    mono_mul,
    monomial_matrix,
    parse_monomial,
    variable,
)

from oracles import monomial_values

exponents = st.tuples(*[st.integers(0, 4)] * 6)
small_poly = st.dictionaries(exponents, st.integers(-5, 5), max_size=6)
points = st.lists(st.floats(-2, 2, allow_nan=False), min_size=6, max_size=6)


def test_parse_examples():
    assert parse_monomial("zw^2y") == (0, 0, 2, 0, 1, 1)
    assert parse_monomial("1") == ONE
    assert parse_monomial("u") == variable("u")
    assert parse_monomial("x^3") == (0, 0, 0, 3, 0, 0)


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_monomial("q^2")
    with pytest.raises(ValueError):
        parse_monomial("u^")


@given(exponents)
def test_format_parse_round_trip(m):
    assert parse_monomial(format_monomial(m)) == m


@given(exponents, exponents)
def test_mul_then_div(a, b):
    assert mono_div(mono_mul(a, b), b) == a


def test_div_not_divisible():
    assert mono_div(variable("u"), variable("v")) is None


def test_grevlex_degree_two_order():
    names = ["uv", "w^2", "u^2", "vw", "v^2", "uw"]
    ordered = sorted((parse_monomial(n) for n in names), key=grevlex_key)
    assert [format_monomial(m) for m in ordered] == ["u^2", "uv", "v^2", "uw", "vw", "w^2"]


def test_grevlex_higher_degree_first():
    ms = [ONE, variable("z"), parse_monomial("u^2"), parse_monomial("xyz")]
    ordered = sorted(ms, key=grevlex_key)
    assert [sum(m) for m in ordered] == [3, 2, 1, 0]


@settings(max_examples=60, deadline=None)
@given(small_poly, small_poly, points)
def test_product_evaluates_to_product(a, b, pt):
    f, g = Polynomial(a), Polynomial(b)
    pt = np.array(pt)
    assert np.isclose((f * g)(pt), f(pt) * g(pt), rtol=1e-9, atol=1e-6)
    assert np.isclose((f + g)(pt), f(pt) + g(pt), rtol=1e-9, atol=1e-9)
    assert np.isclose((f - g)(pt), f(pt) - g(pt), rtol=1e-9, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(small_poly, small_poly)
def test_integer_arithmetic_is_exact(a, b):
    f, g = Polynomial(a), Polynomial(b)
    prod = f * g
    ref: dict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = mono_mul(ma, mb)
            ref[m] = ref.get(m, 0) + ca * cb
    assert prod == Polynomial(ref)


def test_term_order_does_not_change_float_sums():
    rng = random.Random(3)
    terms = {tuple(rng.randint(0, 3) for _ in range(6)): rng.uniform(-1, 1) for _ in range(30)}
    other = {tuple(rng.randint(0, 3) for _ in range(6)): rng.uniform(-1, 1) for _ in range(30)}
    base = Polynomial(terms) * Polynomial(other) + Polynomial(other)
    for _ in range(5):
        ka, kb = list(terms), list(other)
        rng.shuffle(ka)
        rng.shuffle(kb)
        pa = Polynomial({k: terms[k] for k in ka})
        pb = Polynomial({k: other[k] for k in kb})
        again = pa * pb + pb
        assert list(again.terms.items()) == list(base.terms.items())


def test_fraction_coefficients():
    f = Polynomial({variable("u"): Fraction(1, 3)}) * Polynomial({variable("u"): Fraction(3, 2)})
    assert f[parse_monomial("u^2")] == Fraction(1, 2)


def test_zero_terms_dropped():
    f = Polynomial({variable("u"): 1}) - Polynomial({variable("u"): 1})
    assert len(f) == 0
    assert f.total_degree == 0


def test_shift_and_support():
    f = Polynomial({variable("x"): 2, ONE: -1})
    g = f.shift(variable("w"))
    assert set(g.support) == {parse_monomial("xw"), variable("w")}
    assert g[parse_monomial("xw")] == 2


@settings(max_examples=30, deadline=None)
@given(st.lists(exponents, min_size=1, max_size=8), points)
def test_monomial_evaluation_matches_loops(ms, pt):
    E = monomial_matrix(ms)
    assert np.allclose(evaluate_monomials(E, np.array(pt)), monomial_values(ms, pt), rtol=1e-12, atol=0)


def test_batch_evaluation_matches_single():
    rng = np.random.default_rng(0)
    E = rng.integers(0, 4, size=(10, 6))
    P = rng.normal(size=(5, 6)) + 1j * rng.normal(size=(5, 6))
    batch = evaluate_monomials(E, P)
    for k in range(5):
        assert np.allclose(batch[k], evaluate_monomials(E, P[k]))
