import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from ldtlab.errors import ResourceCapError, UsageError
from ldtlab.geometry import gaussian_binomial, linear_subspaces
from ldtlab.gf import make_rng
from ldtlab.spectra import (GrassmannSpec, brute_spectrum, expansion_bounds, grassmann_eigenvalue,
                            grassmann_eigenvalues, grassmann_graph, group_eigenvalues,
                            inclusion_graph, inclusion_singular_value, printed_eigenvalue,
                            retention, sampling_deviation_check)

from oracles import rank_mod


def _multiplicity(q, n, r):
    return gaussian_binomial(n, r, q) - (gaussian_binomial(n, r - 1, q) if r else 0)


@pytest.mark.parametrize("q,n,k", [(2, 4, 2), (3, 4, 2), (2, 4, 1), (2, 4, 3), (3, 5, 2), (2, 5, 2)])
def test_brute_spectrum_matches_closed_form(q, n, k):
    rep = brute_spectrum(GrassmannSpec(q, n, k))
    want = sorted(((float(grassmann_eigenvalue(q, n, k, r)), _multiplicity(q, n, r))
                   for r in range(min(k, n - k) + 1)), reverse=True)
    assert len(rep.eigenvalues) == len(want)
    for (v, m), (w, mw) in zip(rep.eigenvalues, want):
        assert abs(v - w) < 1e-9 and m == mw
    assert rep.vertex_count == gaussian_binomial(n, k, q)


def test_graph_adjacency_matches_rank_oracle():
    spec = GrassmannSpec(2, 4, 2)
    G = grassmann_graph(spec)
    subs = [S.tolist() for S in linear_subspaces(4, 2, 2)]
    for i, j in itertools.combinations(range(len(subs)), 2):
        meet = 4 - rank_mod(subs[i] + subs[j], 2)
        assert G.adjacency[i, j] == (meet == 1)
    assert G.degree == 2 * 3 * 3


def test_printed_formula_agrees_only_at_q2():
    for n, k in [(4, 2), (5, 2), (6, 3), (5, 1)]:
        for r in range(min(k, n - k) + 1):
            assert printed_eigenvalue(2, n, k, r) == grassmann_eigenvalue(2, n, k, r)
    assert grassmann_eigenvalues(3, 4, 2) == [1, Fraction(1, 6), Fraction(-1, 12)]
    assert printed_eigenvalue(3, 4, 2, 2) == Fraction(-1, 25)


def test_top_eigenvalue_is_one():
    for q, n, k in [(2, 6, 3), (5, 4, 2), (7, 3, 1)]:
        assert grassmann_eigenvalue(q, n, k, 0) == 1


def test_eigenvalue_argument_checks():
    with pytest.raises(UsageError):
        grassmann_eigenvalue(2, 4, 3, 2)
    with pytest.raises(UsageError):
        grassmann_eigenvalue(2, 4, 5, 0)
    with pytest.raises(UsageError):
        GrassmannSpec(4, 4, 2)


def test_vertex_cap():
    with pytest.raises(ResourceCapError):
        brute_spectrum(GrassmannSpec(5, 6, 3), cap=100)


def test_affine_graph_is_regular_and_stochastic():
    rep = brute_spectrum(GrassmannSpec(2, 3, 2, affine=True))
    vals = rep.values()
    assert abs(vals[0] - 1) < 1e-9 and vals.min() >= -1 - 1e-9
    assert rep.closed_form is None and rep.vertex_count == 14


def test_group_eigenvalues():
    assert group_eigenvalues([1.0, 0.5, 0.5 + 1e-12, -0.25]) == [(1.0, 1), (0.5 + 5e-13, 2), (-0.25, 1)]


def test_expansion_bounds_hold_for_random_sets():
    q, n, k = 2, 5, 2
    G = grassmann_graph(GrassmannSpec(q, n, k))
    rng = make_rng(0, 0)
    N = len(G.vertices)
    for _ in range(50):
        size = int(rng.integers(1, N + 1))
        A = rng.choice(N, size=size, replace=False)
        lo, hi = expansion_bounds(size / N, q, n, k)
        r = retention(G, A)
        assert lo - 1e-12 <= r <= hi + 1e-12


def test_expansion_bounds_validation():
    with pytest.raises(UsageError):
        expansion_bounds(1.5, 2, 4, 2)
    assert expansion_bounds(0.0, 3, 4, 2)[0] == 0.0


@pytest.mark.parametrize("q", [2, 3, 5])
def test_points_lines_singular_value_exact(q):
    # the pairwise design gives B B^T = (r - 1) I + J with r = q^2 + q + 1
    G = inclusion_graph("G6", q)
    r = q * q + q + 1
    assert G.is_biregular() and G.m == 3
    assert G.second_singular == pytest.approx(math.sqrt((r - 1) / (r * q)))


def test_points_cubes_singular_value_exact():
    q, m = 2, 4
    with pytest.warns(UserWarning):
        G = inclusion_graph("G5", q, m=m)
    r = gaussian_binomial(m, 3, q)          # cubes through a point
    lam = gaussian_binomial(m - 1, 2, q)    # cubes through two points
    assert G.is_biregular()
    assert G.second_singular == pytest.approx(math.sqrt((r - lam) / (r * q**3)))


@pytest.mark.parametrize("gid", ["G1", "G2", "G3", "G4"])
def test_small_inclusion_graphs_are_connected(gid):
    with pytest.warns(UserWarning):
        G = inclusion_graph(gid, 2, m=4)
    sv = G.singular_values()
    assert sv[0] == pytest.approx(1.0) and sv[1] < 1 - 1e-6
    assert not G.regime_ok


def test_inclusion_graph_guards():
    with pytest.raises(UsageError):
        inclusion_graph("G7", 3)
    with pytest.raises(UsageError):
        inclusion_graph("G1", 3, m=3)
    with pytest.raises(ResourceCapError):
        inclusion_graph("G5", 3, m=6, cap=100)
    exact, approx = inclusion_singular_value("g6", 5)
    assert approx == pytest.approx(5**-0.5) and exact < 1


def test_sampling_deviation_examples():
    G = inclusion_graph("G6", 3)
    rng = make_rng(1, 0)
    nA, nB = G.incidence.shape
    for _ in range(100):
        Bp = rng.choice(nB, size=int(rng.integers(1, nB + 1)), replace=False)
        E = rng.random((nA, nB)) < rng.random()
        lhs, bound, ok = sampling_deviation_check(G, Bp, E)
        assert ok and lhs >= 0
    # E' = all edges: both sides are one
    lhs, _, ok = sampling_deviation_check(G, [0, 1], np.ones((nA, nB), dtype=bool))
    assert lhs == pytest.approx(0.0) and ok
    with pytest.raises(UsageError):
        sampling_deviation_check(G, [], np.ones((nA, nB), dtype=bool))
    with pytest.raises(UsageError):
        sampling_deviation_check(G, [0], np.ones((2, 2), dtype=bool))


def test_report_serializes():
    rep = brute_spectrum(GrassmannSpec(2, 4, 2))
    d = rep.as_dict()
    assert d["closed_form"][0]["exact"] == "1" and d["q"] == 2
    assert sum(e["multiplicity"] for e in d["eigenvalues"]) == 35
