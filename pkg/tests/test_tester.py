from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from ldtlab.errors import RareEventError, UsageError
from ldtlab.geometry import contains, enumerate_flats, sample_edge
from ldtlab.gf import make_rng
from ldtlab.poly import random_poly
from ldtlab.tables import corrupted_table, honest_table
from ldtlab.tester import (TestSpec, VariantReport, agree_on, compare_variants, conditional_pass,
                           estimate_pass, estimate_pass_D, restrict_entry, sample_D_batch,
                           sample_through, slack_exponent, sub_seed, trial_symbolic)
from ldtlab.stats import Estimate


def _table(q=3, n=3, d=1, rho=0.5, seed=0, k=2):
    g = random_poly(n, d, q, make_rng(seed, 0))
    return corrupted_table(g, rho, seed=seed + 1, k=k)


def exact_pass(table, k, ell):
    """Average over every ell-flat U of the fraction of (V1, V2) pairs through U
    whose entries restrict to the same polynomial (symbolic comparison)."""
    n, q = table.n, table.q
    total = Fraction(0)
    Us = list(enumerate_flats(n, ell, q))
    for U in Us:
        Vs = list(enumerate_flats(n, k, q, containing=U))
        restr = [restrict_entry(table, V, U) for V in Vs]
        agree = sum(a == b for a in restr for b in restr)
        total += Fraction(agree, len(Vs) ** 2)
    return total / len(Us)


def test_honest_table_always_passes():
    T = honest_table(random_poly(4, 2, 7, make_rng(0, 0)))
    for ell in range(3):
        assert estimate_pass(T, TestSpec(3, ell, 3000, ell)).p_hat == 1


@pytest.mark.parametrize("n,k,ell", [(3, 2, 1), (3, 2, 0), (4, 2, 0)])
def test_pass_estimate_matches_exhaustive_oracle(n, k, ell):
    T = _table(n=n, k=k)
    p = float(exact_pass(T, k, ell))
    est = estimate_pass(T, TestSpec(k, ell, 40_000, 3))
    assert est.lower <= p <= est.upper
    assert 0 < p < 1


def test_lattice_comparison_matches_symbolic():
    T = _table(q=5, n=4, d=2, rho=0.5, k=3)
    rng = make_rng(4, 0)
    for _ in range(300):
        e = sample_edge(4, 3, 1, rng, 5)
        fast = agree_on(T, e.first.as_batch(), e.second.as_batch(), e.through.as_batch())[0]
        assert fast == trial_symbolic(T, e.through, e.first, e.second)


def test_estimate_pass_is_thread_and_chunk_independent():
    T = _table(q=5, n=4, d=2, k=3)
    spec = TestSpec(3, 2, 20_000, 7)
    a = estimate_pass(T, spec, threads=1)
    b = estimate_pass(T, spec, threads=3)
    assert a.successes == b.successes
    assert estimate_pass(T, spec).successes == a.successes


def test_spec_validation():
    T = _table(q=5, n=4, d=2, k=3)
    for bad in [TestSpec(3, 3, 10), TestSpec(5, 1, 10), TestSpec(3, 1, 0), TestSpec(3, -1, 10)]:
        with pytest.raises(UsageError):
            estimate_pass(T, bad)
    with pytest.raises(UsageError):
        estimate_pass(T, TestSpec(2, 1, 10))


def test_sub_seed_is_deterministic_and_spread():
    assert sub_seed(5, 1) == sub_seed(5, 1)
    seeds = {sub_seed(5, i) for i in range(1000)} | {sub_seed(6, 0), sub_seed(5, 0, 0)}
    assert len(seeds) == 1002
    assert all(0 <= s < 2**63 for s in seeds)


def test_variant_report_arithmetic():
    a, b = Estimate(900, 1000), Estimate(850, 1000)
    rep = VariantReport(3, 0, 1, 11, a, b, 0.5)
    assert rep.exponent == slack_exponent(3, 0, 1) == 2
    assert rep.upper_slack == pytest.approx(1.5 / 121)
    assert rep.lower_holds and rep.upper_holds and rep.holds
    assert rep.unscaled_lower_holds == (0.9 <= 0.85 + rep.ci_slack)
    assert rep.as_dict()["exponent"] == 2


def test_compare_variants_guards():
    T = _table(q=5, n=4, d=2, k=3)
    with pytest.raises(UsageError):
        compare_variants(T, 0, 1, 100)
    T6 = _table(q=5, n=6, d=2, k=3)
    with pytest.raises(UsageError):
        compare_variants(T6, 1, 1, 100)
    rep = compare_variants(T6, 0, 1, 2000, seed=1)
    assert rep.alpha_r.trials == rep.alpha_r_prime.trials == 2000


def test_D_sample_structure():
    T = _table(q=5, n=4, d=2, k=3)
    batch = sample_D_batch(T, make_rng(5, 0), 200)
    for i in range(200):
        s = batch.sample(i)
        assert s.x != s.y
        assert contains(s.C1, s.x) and contains(s.C1, s.y)
        assert contains(s.C1, s.plane) and contains(s.C2, s.plane)
        assert contains(s.plane, s.x) and contains(s.plane, s.y)
        assert s.sigma == T.value_at(s.C1, s.x) and s.tau == T.value_at(s.C2, s.y)
        assert s.passed == trial_symbolic(T, s.plane, s.C1, s.C2)


def test_D_pass_rate_equals_codim_one_test():
    # the plane of a D tuple is a uniform hyperplane of a uniform C1
    T = _table(q=3, n=4, d=1, rho=0.5, k=3)
    a = estimate_pass_D(T, 40_000, seed=1)
    b = estimate_pass(T, TestSpec(3, 2, 40_000, 2))
    assert abs(a.p_hat - b.p_hat) <= a.half_width + b.half_width


def test_D_needs_two_dimensional_flats():
    with pytest.raises(UsageError):
        sample_D_batch(_table(q=5, n=4, d=2, k=1), make_rng(0, 0), 4)


def test_sample_through_is_uniform_over_qualifying_flats():
    T = _table(q=3, n=3, d=1, rho=0.7, k=2)
    x = np.array([1, 0, 2])
    sigma = 1
    good = [P for P in enumerate_flats(3, 2, 3, containing=x) if T.value_at(P, x) == sigma]
    assert 1 < len(good) < 13
    idx = {P: i for i, P in enumerate(good)}
    got = sample_through(T, x, sigma, 6000, make_rng(6, 0))
    counts = Counter(idx[P] for P in got.flats())
    assert stats.chisquare([counts[i] for i in range(len(good))]).pvalue > 0.001


def test_sample_through_rare_event():
    g = random_poly(3, 1, 5, make_rng(7, 0))
    T = honest_table(g, k=2)
    x = (1, 2, 3)
    wrong = (g.evaluate(x).value + 1) % 5
    with pytest.raises(RareEventError):
        sample_through(T, x, wrong, 5, make_rng(7, 1), cap=500)


def test_conditional_pass_honest():
    g = random_poly(4, 2, 7, make_rng(8, 0))
    T = honest_table(g)
    x = (1, 2, 3, 4)
    est = conditional_pass(T, x, g.evaluate(x).value, 500, make_rng(8, 1))
    assert est.p_hat == 1
