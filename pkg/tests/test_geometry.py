import itertools
import struct
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from ldtlab.errors import ResourceCapError, UsageError
from ldtlab.geometry import (FlatBatch, affine_span, canonicalize, complete_batch,
                             contains, count_flats, count_flats_constrained, enumerate_flats,
                             gaussian_binomial, intersect, intersection_dim, linear_subspaces,
                             sample_edge, sample_edge_batch, sample_flat, sample_flats_batch)
from ldtlab.gf import make_rng

from oracles import brute_flats, flat_points, point_set_dim, rank_mod


def test_canonicalize_examples():
    a = canonicalize((1, 1), [(1, 0), (2, 0)], 5)
    b = canonicalize((0, 1), [(1, 0)], 5)
    assert a == b and a.k == 1
    p = canonicalize((3, 4, 0), [], 5)
    assert p.k == 0 and p.base == (3, 4, 0)


def test_canonical_form_invariants():
    rng = make_rng(0, 0)
    for _ in range(50):
        F = sample_flat(5, 3, rng, 7)
        B = F.basis_array
        assert rank_mod(B.tolist(), 7) == 3
        for i, p in enumerate(F.pivots):
            assert B[i, p] == 1 and (np.delete(B[:, p], i) == 0).all()
            assert F.base[p] == 0


def test_canonicalize_reparameterization_invariant():
    rng = make_rng(1, 0)
    q = 7
    F = sample_flat(5, 3, rng, q)
    B = F.basis_array
    seen = set()
    for _ in range(500):
        while True:
            G = rng.integers(0, q, size=(3, 3))
            if rank_mod(G.tolist(), q) == 3:
                break
        shift = rng.integers(0, q, size=3) @ B
        seen.add(canonicalize(F.base_array + shift, G @ B % q, q))
    assert seen == {F}


@given(seed=st.integers(0, 2**32), n=st.integers(1, 5), k=st.integers(0, 5))
def test_canonicalize_idempotent(seed, n, k):
    k = min(k, n)
    F = sample_flat(n, k, make_rng(seed, 0), 5)
    assert canonicalize(F.base, F.basis_array, 5) == F
    assert flat_points(F) == frozenset(map(tuple, F.points().tolist()))


def test_encoding_layout():
    F = canonicalize((0, 2, 1), [(1, 0, 3)], 5)
    raw = F.encode()
    words = struct.unpack("<" + "Q" * (len(raw) // 8), raw)
    assert words == (3, 1, *F.basis[0], *F.base)


def test_contains_examples():
    rng = make_rng(2, 0)
    C = sample_flat(4, 3, rng, 3)
    assert contains(C, C.base)
    for line in enumerate_flats(4, 1, 3, within=C):
        assert contains(C, line)
        for p in line.points():
            assert contains(C, p)
    with pytest.raises(UsageError):
        contains(C, (0, 0, 0))


def test_contains_frequency_matches_count():
    # fraction of 2-flats inside a fixed 3-flat of GF(2)^4
    rng = make_rng(3, 0)
    C = sample_flat(4, 3, rng, 2)
    inside = sum(1 for _ in enumerate_flats(4, 2, 2, within=C))
    p = inside / count_flats(4, 2, 2)
    N = 5000
    hits = sum(contains(C, sample_flat(4, 2, rng, 2)) for _ in range(N))
    assert abs(hits / N - p) < 4 * np.sqrt(p * (1 - p) / N)
    P = sample_flat(4, 2, rng, 2, within=C)
    assert contains(C, P)


def test_intersect_examples():
    rng = make_rng(4, 0)
    a = sample_flat(4, 2, rng, 5)
    assert intersect(a, a) == a
    l1 = canonicalize((0, 0), [(1, 1)], 5)
    l2 = canonicalize((1, 0), [(1, 1)], 5)
    assert intersect(l1, l2) is None and intersection_dim(l1, l2) == -1


def test_intersect_all_planes_gf2():
    planes = list(enumerate_flats(4, 2, 2))
    pts = [flat_points(P) for P in planes]
    for i, j in itertools.combinations_with_replacement(range(len(planes)), 2):
        got = intersect(planes[i], planes[j])
        common = pts[i] & pts[j]
        assert intersection_dim(planes[i], planes[j]) == point_set_dim(common, 2)
        if got is not None:
            assert flat_points(got) == common


@given(seed=st.integers(0, 2**32), k1=st.integers(0, 4), k2=st.integers(0, 4))
def test_intersection_is_contained_in_both(seed, k1, k2):
    rng = make_rng(seed, 0)
    a, b = sample_flat(4, k1, rng, 3), sample_flat(4, k2, rng, 3)
    c = intersect(a, b)
    if c is not None:
        assert contains(a, c) and contains(b, c)
    assert contains(a, a)


def test_affine_span():
    F = affine_span([(0, 0, 0), (1, 0, 0), (0, 1, 0)], 3)
    assert F == canonicalize((0, 0, 0), [(1, 0, 0), (0, 1, 0)], 3)
    assert affine_span([], 3) is None


def test_sample_flat_full_space():
    F = sample_flat(3, 3, make_rng(5, 0), 5)
    assert F.k == 3 and F.base == (0, 0, 0)


def test_sample_flat_uniform_over_lines_gf2():
    lines = {f: i for i, f in enumerate(enumerate_flats(4, 1, 2))}
    assert len(lines) == 120
    batch = sample_flats_batch(make_rng(6, 0), 2, 4, 1, 100_000)
    counts = Counter(lines[f] for f in batch.flats())
    obs = np.array([counts[i] for i in range(120)])
    assert stats.chisquare(obs).pvalue > 0.001


def test_scalar_sampler_uniform_over_planes_in_cube():
    rng = make_rng(7, 0)
    C = sample_flat(4, 3, rng, 2)
    planes = {f: i for i, f in enumerate(enumerate_flats(4, 2, 2, within=C))}
    counts = Counter(planes[sample_flat(4, 2, rng, 2, within=C)] for _ in range(7000))
    assert len(counts) == len(planes) == 14
    assert stats.chisquare([counts[i] for i in range(14)]).pvalue > 0.001


def test_cubes_through_point_contain_it():
    rng = make_rng(8, 0)
    x = np.array([1, 2, 0, 1])
    B = complete_batch(rng, 3, np.broadcast_to(x, (10_000, 4)), np.zeros((10_000, 0, 4)), 3)
    assert B.contains_points(np.broadcast_to(x, (10_000, 1, 4))).all()
    F = sample_flat(4, 3, rng, 3, containing=[x])
    assert contains(F, x)


def test_sample_flat_infeasible():
    rng = make_rng(9, 0)
    with pytest.raises(UsageError):
        sample_flat(3, 1, rng, 5, containing=[(0, 0, 0), (1, 0, 0), (0, 1, 0)])
    with pytest.raises(UsageError):
        sample_flat(3, 4, rng, 5)


def test_sample_edge_contains_plane():
    rng = make_rng(10, 0)
    for _ in range(200):
        e = sample_edge(5, 3, 2, rng, 3)
        assert contains(e.first, e.through) and contains(e.second, e.through)
        assert e.intersection_dim >= 2


def test_sample_edge_same_cube_probability():
    # cubes through a plane in GF(2)^4: Gaussian binomial [2 choose 1]_2 = 3
    n_cubes = count_flats_constrained(4, 3, 2, containing=canonicalize((0,) * 4, [(1, 0, 0, 0), (0, 1, 0, 0)], 2))
    assert n_cubes == 3
    N = 60_000
    U, V1, V2 = sample_edge_batch(make_rng(11, 0), 2, 4, 3, 2, N)
    same = (V1.words() == V2.words()).all(axis=1).mean()
    p = 1 / n_cubes
    assert abs(same - p) < 4 * np.sqrt(p * (1 - p) / N)


def test_sample_edge_marginal_uniform():
    planes = {f: i for i, f in enumerate(enumerate_flats(4, 2, 2))}
    U, V1, V2 = sample_edge_batch(make_rng(12, 0), 2, 4, 2, 1, 70_000)
    counts = Counter(planes[f] for f in V1.flats())
    assert stats.chisquare([counts[i] for i in range(len(planes))]).pvalue > 0.001


def test_enumeration_counts():
    assert len(list(enumerate_flats(4, 1, 2, containing=(0, 0, 0, 0)))) == 15
    assert len(list(linear_subspaces(4, 1, 2))) == 15
    assert len(list(enumerate_flats(4, 3, 2))) == 30 == 2 * gaussian_binomial(4, 3, 2)
    cube = sample_flat(5, 3, make_rng(13, 0), 3)
    lines = list(enumerate_flats(5, 1, 3, within=cube))
    assert len(lines) == len(set(lines)) == 117 == 9 * 13


@pytest.mark.parametrize("n,k,q", [(3, 1, 2), (3, 2, 3), (4, 2, 2), (4, 1, 3)])
def test_enumeration_matches_point_set_oracle(n, k, q):
    got = {flat_points(f) for f in enumerate_flats(n, k, q)}
    assert got == brute_flats(n, k, q)
    assert len(got) == count_flats(n, k, q)


def test_enumeration_with_both_constraints():
    q = 3
    rng = make_rng(14, 0)
    W = sample_flat(4, 3, rng, q)
    x = W.embed([1, 1, 2])
    got = list(enumerate_flats(4, 2, q, within=W, containing=x))
    want = [f for f in enumerate_flats(4, 2, q) if contains(W, f) and contains(f, x)]
    assert set(got) == set(want) and len(got) == len(want)


def test_enumeration_cap():
    with pytest.raises(ResourceCapError):
        enumerate_flats(6, 3, 5, cap=1000)


def test_translation_is_a_bijection():
    planes = list(enumerate_flats(4, 2, 2))
    v = np.array([1, 0, 1, 1])
    moved = [P.translate(v) for P in planes]
    assert set(moved) == set(planes)
    lines = list(enumerate_flats(4, 1, 2))
    for L, P in itertools.islice(itertools.product(lines, planes), 0, None, 37):
        assert contains(P, L) == contains(P.translate(v), L.translate(v))


def test_flat_batch_coordinates_round_trip():
    rng = make_rng(15, 0)
    B = sample_flats_batch(rng, 7, 5, 3, 50)
    t = rng.integers(0, 7, size=(50, 4, 3))
    pts = B.embed(t)
    assert np.array_equal(B.local_coords(pts), t)
    assert B.contains_points(pts).all()
    S = FlatBatch.stack(B.flats())
    assert np.array_equal(S.words(), B.words())
