import itertools
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from ldtlab.errors import InsufficientDataError, NoFitError, UsageError
from ldtlab.geometry import canonicalize, sample_flat
from ldtlab.gf import FieldParams, make_rng
from ldtlab.poly import (MultiPoly, all_points, evaluate_coeffs, fraction_agreement, interpolate,
                         interpolate_cube, monomials, random_poly, restrict, simplex_lattice)

from oracles import exhaustive_agreement, naive_eval


def x1x2(q):
    return MultiPoly.from_terms(q, 2, 2, {(1, 1): 1})


def test_zero_polynomial_evaluates_to_zero():
    z = MultiPoly.zero(7, 3, 2)
    for p in itertools.product(range(7), repeat=3):
        assert z.evaluate(p) == FieldParams(7)(0)
    assert z.degree() == -1


def test_evaluate_example():
    assert x1x2(7).evaluate((3, 5)).value == 1


def test_evaluate_length_mismatch():
    with pytest.raises(UsageError):
        x1x2(7).evaluate((1, 2, 3))


def test_evaluation_matches_naive_oracle():
    p = random_poly(2, 3, 11, make_rng(1, 0))
    terms = p.terms()
    for pt in itertools.product(range(11), repeat=2):
        assert p.evaluate(pt).value == naive_eval(terms, pt, 11)


def test_monomial_order_and_count():
    mons = monomials(2, 2)
    assert mons == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    for m, d in [(1, 4), (3, 2), (4, 3), (0, 2)]:
        assert len(monomials(m, d)) == comb(m + d, d)


def test_restrict_diagonal_line():
    line = canonicalize((0, 0), [(1, 1)], 7)
    r = restrict(x1x2(7), line)
    assert r == MultiPoly.from_terms(7, 1, 2, {(2,): 1})


def test_restrict_constant():
    c = MultiPoly.constant(5, 4, 2, 3)
    F = sample_flat(4, 3, make_rng(0, 0), 5)
    assert restrict(c, F) == MultiPoly.constant(5, 3, 2, 3)


def test_restrict_pointwise_oracle():
    rng = make_rng(2, 0)
    p = random_poly(4, 2, 5, rng)
    F = sample_flat(4, 3, rng, 5)
    r = restrict(p, F)
    terms = p.terms()
    for t in itertools.product(range(5), repeat=3):
        assert r.evaluate(t).value == naive_eval(terms, F.embed(t), 5)


@given(q=st.sampled_from([5, 7]), m=st.integers(1, 5), d=st.integers(0, 3),
       k=st.integers(0, 5), seed=st.integers(0, 2**32))
def test_restrict_commutes_with_evaluation(q, m, d, k, seed):
    k = min(k, m)
    rng = make_rng(seed, 0)
    p = random_poly(m, d, q, rng)
    F = sample_flat(m, k, rng, q)
    r = p.restrict(F)
    assert r.degree() <= p.degree()
    t = rng.integers(0, q, size=(20, k))
    assert np.array_equal(r.evaluate_batch(t), p.evaluate_batch(F.embed(t)))


@given(seed=st.integers(0, 2**32), d1=st.integers(0, 3), d2=st.integers(0, 3))
def test_arithmetic_is_pointwise(seed, d1, d2):
    rng = make_rng(seed, 0)
    a, b = random_poly(2, d1, 7, rng), random_poly(2, d2, 7, rng)
    pts = all_points(2, 7)
    va, vb = a.evaluate_batch(pts), b.evaluate_batch(pts)
    assert np.array_equal((a + b).evaluate_batch(pts), (va + vb) % 7)
    assert np.array_equal((a - b).evaluate_batch(pts), (va - vb) % 7)
    assert np.array_equal((a * b).evaluate_batch(pts), va * vb % 7)


def test_equality_ignores_degree_bound():
    p = MultiPoly.from_terms(7, 2, 1, {(1, 0): 3})
    assert p == p.with_degree_bound(4)
    assert hash(p) == hash(p.with_degree_bound(4))
    with pytest.raises(UsageError):
        (p * p).with_degree_bound(1)


def test_mixed_moduli_rejected():
    with pytest.raises(UsageError):
        MultiPoly.zero(7, 2, 1) + MultiPoly.zero(5, 2, 1)


@given(seed=st.integers(0, 2**32), m=st.integers(1, 4), d=st.integers(0, 3))
def test_record_round_trip(seed, m, d):
    p = random_poly(m, d, 11, make_rng(seed, 0))
    text = p.to_record()
    assert text.startswith(f"q=11 m={m} d={d}\n")
    back = MultiPoly.from_record(text)
    assert back == p and back.degree_bound == d


def test_interpolate_cube_full_grid():
    p = random_poly(3, 2, 5, make_rng(3, 0))
    pts = all_points(3, 5)
    vals = {tuple(x): int(v) for x, v in zip(pts.tolist(), p.evaluate_batch(pts))}
    assert interpolate_cube(vals, 2, 5) == p


def test_interpolate_zero_values():
    pts = all_points(3, 5)
    assert interpolate_cube((pts, np.zeros(len(pts), dtype=np.int64)), 2, 5).is_zero()


def test_interpolate_degree_three_with_bound_two_fails():
    # x1^2 x2 has degree 3 and is not a degree-2 function on GF(7)^3 (its grid
    # values need the x1^2 x2 monomial, which exists since 2 < 7 and 1 < 7)
    f = MultiPoly.from_terms(7, 3, 3, {(2, 1, 0): 1})
    pts = all_points(3, 7)
    with pytest.raises(NoFitError):
        interpolate_cube((pts, f.evaluate_batch(pts)), 2, 7)


def test_interpolate_underdetermined():
    pts = all_points(3, 5)[:5]
    with pytest.raises(InsufficientDataError):
        interpolate(pts, np.zeros(5), 2, 5)


def test_interpolate_needs_small_degree():
    with pytest.raises(UsageError):
        interpolate(all_points(1, 3), np.zeros(3), 3, 3)


def test_interpolation_identity_exhaustive_q3_d1():
    pts = all_points(3, 3)
    for coeffs in itertools.product(range(3), repeat=4):
        p = MultiPoly(3, 3, 1, coeffs)
        assert interpolate(pts, p.evaluate_batch(pts), 1, 3) == p


@given(seed=st.integers(0, 2**32), m=st.integers(1, 3), d=st.integers(0, 3))
def test_simplex_lattice_is_unisolvent(seed, m, d):
    lat = simplex_lattice(m, d)
    assert len(lat) == comb(m + d, d)
    p = random_poly(m, d, 7, make_rng(seed, 0))
    assert interpolate(lat, p.evaluate_batch(lat), d, 7) == p


def test_fraction_agreement_examples():
    p = random_poly(2, 3, 11, make_rng(4, 0))
    assert fraction_agreement(p, p) == 1
    a = MultiPoly(13, 1, 1, (4, 2))
    b = MultiPoly(13, 1, 1, (4, 5))
    assert fraction_agreement(a, b) == Fraction(1, 13)


def test_fraction_agreement_matches_oracle():
    rng = make_rng(5, 0)
    pts = all_points(2, 5)
    for _ in range(20):
        a, b = random_poly(2, 2, 5, rng), random_poly(2, 2, 5, rng)
        want = exhaustive_agreement([naive_eval(a.terms(), x, 5) for x in pts.tolist()],
                                    [naive_eval(b.terms(), x, 5) for x in pts.tolist()])
        assert fraction_agreement(a, b) == want


def test_fraction_agreement_monte_carlo_mode():
    a = random_poly(3, 1, 11, make_rng(6, 0))
    est = fraction_agreement(a, a + 1, cap=10, trials=5000, rng=make_rng(6, 1))
    assert est == 0
    with pytest.raises(UsageError):
        fraction_agreement(a, a, cap=10)


def test_schwartz_zippel_small():
    rng = make_rng(9, 0)
    for _ in range(200):
        a, b = random_poly(2, 3, 11, rng), random_poly(2, 3, 11, rng)
        if a != b:
            assert fraction_agreement(a, b) <= Fraction(3, 11)


def test_random_poly_reproducible_and_constant_case():
    assert random_poly(3, 2, 7, make_rng(1, 2)) == random_poly(3, 2, 7, make_rng(1, 2))
    c = random_poly(4, 0, 7, make_rng(1, 3))
    assert c.degree() <= 0 and len(c.coeffs) == 1


def test_random_poly_value_at_origin_uniform():
    rng = make_rng(10, 0)
    vals = [random_poly(2, 2, 7, rng).evaluate((0, 0)).value for _ in range(10_000)]
    assert stats.chisquare(np.bincount(vals, minlength=7)).pvalue > 0.001


def test_evaluate_coeffs_batches():
    rng = make_rng(11, 0)
    ps = [random_poly(3, 2, 7, rng) for _ in range(4)]
    pts = rng.integers(0, 7, size=(4, 9, 3))
    got = evaluate_coeffs(np.array([p.coeffs for p in ps]), pts, 3, 2, 7)
    for i, p in enumerate(ps):
        assert np.array_equal(got[i], p.evaluate_batch(pts[i]))
