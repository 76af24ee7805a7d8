"""Grassmann-graph spectra and bipartite inclusion graphs.

Closed forms are exact rationals; brute-force counterparts build the graphs
over enumerated flats and diagonalize the normalized (random-walk) operator.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import ResourceCapError, UsageError
from .geometry import (canonicalize, count_flats, count_flats_constrained,
                       enumerate_flats, gaussian_binomial, linear_subspaces)
from .gf import FieldParams
from .linalg import rref_batch
from .poly import all_points

DEFAULT_VERTEX_CAP = 2000
TOLERANCE = 1e-9


def _gauss(x: int, q: int) -> int:
    return (q**x - 1) // (q - 1)


def grassmann_eigenvalue(q: int, n: int, k: int, r: int) -> Fraction:
    """Eigenvalue ``lambda_r`` of the normalized adjacency operator of G(k, k-1).

    Uses the eigenvalues of the Grassmann scheme J_q(n, k): the adjacency
    eigenvalue ``q^(r+1) [k-r][n-k-r] - [r]`` over the degree ``q [k][n-k]``,
    with ``[x] = (q^x - 1)/(q - 1)``.  At q = 2 this equals
    :func:`printed_eigenvalue`; for q > 2 the printed formula is off.
    """
    if not 0 <= r <= k <= n:
        raise UsageError(f"need 0 <= r <= k <= n, got r={r}, k={k}, n={n}")
    if r > n - k:
        raise UsageError(f"G({k},{k - 1}) in dimension {n} has only {min(k, n - k) + 1} eigenvalues")
    deg = q * _gauss(k, q) * _gauss(n - k, q)
    if deg == 0:
        raise UsageError("degenerate parameters: the graph has no edges")
    theta = q ** (r + 1) * _gauss(k - r, q) * _gauss(n - k - r, q) - _gauss(r, q)
    return Fraction(theta, deg)


def printed_eigenvalue(q: int, n: int, k: int, r: int) -> Fraction:
    """``[-(q^k-1) + q^r (q^(k-r)-1)(q^(n-k-r+1)-1)] / [(q^k-1)(q^(n-k+1)-2)]`` verbatim."""
    if not 0 <= r <= k <= n:
        raise UsageError(f"need 0 <= r <= k <= n, got r={r}, k={k}, n={n}")
    e = n - k - r + 1
    inner = Fraction(q) ** e - 1
    num = -(q**k - 1) + q**r * (q ** (k - r) - 1) * inner
    den = (q**k - 1) * (q ** (n - k + 1) - 2)
    if den == 0:
        raise UsageError("degenerate parameters")
    return Fraction(num) / den


def grassmann_eigenvalues(q: int, n: int, k: int) -> list[Fraction]:
    return [grassmann_eigenvalue(q, n, k, r) for r in range(min(k, n - k) + 1)]


@dataclass(frozen=True)
class GrassmannSpec:
    q: int
    n: int
    k: int
    affine: bool = False

    def __post_init__(self):
        FieldParams(self.q)
        if not 1 <= self.k <= self.n:
            raise UsageError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def vertex_count(self) -> int:
        return count_flats(self.n, self.k, self.q) if self.affine else gaussian_binomial(self.n, self.k, self.q)


@dataclass
class SpectrumReport:
    spec: Optional[GrassmannSpec]
    eigenvalues: list               # (value, multiplicity), descending
    vertex_count: int = 0
    degree: int = 0
    second_singular: Optional[float] = None
    closed_form: Optional[list] = None

    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.eigenvalues])

    def as_dict(self) -> dict:
        out = {"eigenvalues": [{"value": v, "multiplicity": m} for v, m in self.eigenvalues],
               "vertex_count": self.vertex_count, "degree": self.degree,
               "second_singular": self.second_singular}
        if self.spec is not None:
            out.update(q=self.spec.q, n=self.spec.n, k=self.spec.k, affine=self.spec.affine)
        if self.closed_form is not None:
            out["closed_form"] = [{"r": r, "value": float(v), "exact": str(v)}
                                  for r, v in enumerate(self.closed_form)]
        return out


def group_eigenvalues(values, tol: float = 1e-7) -> list:
    vals = sorted((float(v) for v in values), reverse=True)
    groups: list = []
    for v in vals:
        if groups and abs(groups[-1][0] - v) <= tol:
            c, m = groups[-1]
            groups[-1] = ((c * m + v) / (m + 1), m + 1)
        else:
            groups.append((v, 1))
    return groups


@dataclass
class GrassmannGraph:
    spec: GrassmannSpec
    vertices: list
    adjacency: np.ndarray

    @property
    def degree(self) -> int:
        return int(self.adjacency[0].sum())

    def normalized(self) -> np.ndarray:
        return self.adjacency / self.degree


def _pair_ranks(mats: np.ndarray, q: int) -> np.ndarray:
    """Rank of every stacked pair ``[mats[i]; mats[j]]``, shape ``(N, N)``."""
    N = mats.shape[0]
    out = np.empty((N, N), dtype=np.int64)
    for i in range(N):
        pair = np.concatenate([np.broadcast_to(mats[i], mats.shape), mats], axis=1)
        out[i] = rref_batch(pair, q)[2]
    return out


def grassmann_graph(spec: GrassmannSpec, cap: int = DEFAULT_VERTEX_CAP) -> GrassmannGraph:
    """Vertices are k-subspaces (or k-flats); edges join pairs meeting in dimension k-1."""
    N = spec.vertex_count
    if N > cap:
        raise ResourceCapError(f"{N} vertices exceed cap {cap}", N, cap)
    q, n, k = spec.q, spec.n, spec.k
    if spec.affine:
        verts = list(enumerate_flats(n, k, q, cap=cap))
    else:
        verts = [canonicalize(np.zeros(n, dtype=np.int64), S, q) for S in linear_subspaces(n, k, q)]
    D = np.array([v.basis_array for v in verts], dtype=np.int64)
    dir_rank = _pair_ranks(D, q)
    inter = 2 * k - dir_rank
    if spec.affine:
        base = np.array([v.base_array for v in verts], dtype=np.int64)
        meet = np.empty((N, N), dtype=bool)
        for i in range(N):
            diff = (base - base[i]) % q
            aug = np.concatenate([np.broadcast_to(D[i], D.shape), D, diff[:, None, :]], axis=1)
            meet[i] = rref_batch(aug, q)[2] == dir_rank[i]
        inter = np.where(meet, inter, -1)
    A = (inter == k - 1).astype(np.float64)
    np.fill_diagonal(A, 0.0)
    return GrassmannGraph(spec, verts, A)


def brute_spectrum(spec: GrassmannSpec, cap: int = DEFAULT_VERTEX_CAP) -> SpectrumReport:
    G = grassmann_graph(spec, cap)
    if G.degree == 0:
        raise UsageError("graph has no edges")
    vals = np.linalg.eigvalsh(G.normalized())
    closed = None if spec.affine else grassmann_eigenvalues(spec.q, spec.n, spec.k)
    return SpectrumReport(spec, group_eigenvalues(vals), len(G.vertices), G.degree, closed_form=closed)


def expansion_bounds(mu: float, q: int, n: int, k: int) -> tuple[float, float]:
    """Bounds on ``1 - Phi(A)`` for a set of measure ``mu`` in G(k, k-1)."""
    if not 0.0 <= mu <= 1.0:
        raise UsageError(f"measure must be in [0, 1], got {mu}")
    # |lambda_min|; equals 1/(q^(n-k+1) - 2) at q = 2
    lo = mu - abs(float(grassmann_eigenvalue(q, n, k, min(k, n - k))))
    hi = mu + 1.0 / q
    return max(0.0, lo), min(1.0, hi)


def retention(graph: GrassmannGraph, subset) -> float:
    """Exact ``1 - Phi(A)``: chance a random neighbor of a random vertex of A stays in A."""
    mask = np.zeros(len(graph.vertices), dtype=bool)
    mask[np.asarray(subset, dtype=np.int64)] = True
    if not mask.any():
        raise UsageError("empty vertex set")
    inside = graph.adjacency[np.ix_(mask, mask)].sum()
    return float(inside) / (mask.sum() * graph.degree)


# ---------------------------------------------------------------------------
# bipartite inclusion graphs

APPROX_SECOND_SINGULAR = {
    "G1": lambda q: q**-0.5,
    "G2": lambda q: 1.0 / q,
    "G3": lambda q: 1.0 / q,
    "G4": lambda q: q**-0.5,
    "G5": lambda q: q**-1.5,
    "G6": lambda q: q**-0.5,
}

DESCRIPTIONS = {
    "G1": "lines not through x vs cubes through x",
    "G2": "lines through x vs cubes through x",
    "G3": "points other than x vs cubes through x",
    "G4": "points off a line l vs cubes containing l",
    "G5": "points vs cubes",
    "G6": "points of GF(q)^3 vs lines",
}


@dataclass
class InclusionGraph:
    graph_id: str
    q: int
    m: int
    left: list            # points (tuples) or flats
    right: list           # flats
    incidence: np.ndarray  # bool, (|left|, |right|)
    regime_ok: bool = True
    _sv: Optional[np.ndarray] = field(default=None, repr=False)

    def singular_values(self) -> np.ndarray:
        if self._sv is None:
            B = self.incidence.astype(np.float64)
            da = B.sum(axis=1)
            db = B.sum(axis=0)
            if (da == 0).any() or (db == 0).any():
                raise UsageError("inclusion graph has isolated vertices")
            M = B / np.sqrt(da)[:, None] / np.sqrt(db)[None, :]
            self._sv = np.linalg.svd(M, compute_uv=False)
        return self._sv

    @property
    def second_singular(self) -> float:
        return float(self.singular_values()[1])

    def is_biregular(self) -> bool:
        da = self.incidence.sum(axis=1)
        db = self.incidence.sum(axis=0)
        return bool((da == da[0]).all() and (db == db[0]).all())


def _point_masks(flats, q: int, m: int) -> np.ndarray:
    """Membership of every point of GF(q)^m in each flat, ``(len(flats), q^m)``."""
    weights = q ** np.arange(m - 1, -1, -1)
    out = np.zeros((len(flats), q**m), dtype=np.float32)
    for i, f in enumerate(flats):
        out[i, f.points() @ weights] = 1.0
    return out


def inclusion_graph(graph_id: str, q: int, m: int = 6, cap: int = DEFAULT_VERTEX_CAP) -> InclusionGraph:
    graph_id = graph_id.upper()
    if graph_id not in APPROX_SECOND_SINGULAR:
        raise UsageError(f"unknown inclusion graph {graph_id!r}; expected one of G1..G6")
    FieldParams(q)
    if graph_id == "G6":
        m = 3
    if graph_id != "G6" and m < 4:
        raise UsageError("inclusion graphs G1..G5 need m >= 4 (at m = 3 there is a single cube)")
    regime_ok = graph_id == "G6" or m >= 6
    if not regime_ok:
        warnings.warn(f"{graph_id} with m={m} is outside the m >= 6 regime", stacklevel=2)
    x = np.zeros(m, dtype=np.int64)
    e1 = np.zeros(m, dtype=np.int64)
    e1[0] = 1
    line = canonicalize(x, [e1], q)
    pts_all = all_points(m, q)
    xpt = canonicalize(x, [], q)

    def check(count):
        if count > cap:
            raise ResourceCapError(f"{count} vertices exceed cap {cap}", count, cap)

    if graph_id in ("G1", "G2", "G3"):
        check(count_flats_constrained(m, 3, q, containing=xpt))
        right = list(enumerate_flats(m, 3, q, containing=xpt, cap=cap))
    elif graph_id == "G4":
        check(count_flats_constrained(m, 3, q, containing=line))
        right = list(enumerate_flats(m, 3, q, containing=line, cap=cap))
    elif graph_id == "G5":
        check(count_flats(m, 3, q))
        right = list(enumerate_flats(m, 3, q, cap=cap))
    else:
        check(count_flats(3, 1, q))
        right = list(enumerate_flats(3, 1, q, cap=cap))

    if graph_id in ("G1", "G2"):
        lines = list(enumerate_flats(m, 1, q, cap=max(cap, count_flats(m, 1, q))))
        through = np.array([f.contains(x) for f in lines])
        left = [f for f, t in zip(lines, through) if t == (graph_id == "G2")]
        check(len(left))
        inc = (_point_masks(left, q, m) @ _point_masks(right, q, m).T) == q
        return InclusionGraph(graph_id, q, m, left, right, inc, regime_ok)

    if graph_id == "G3":
        keep = pts_all.any(axis=1)
    elif graph_id == "G4":
        keep = np.array([not line.contains(p) for p in pts_all])
    else:
        keep = np.ones(len(pts_all), dtype=bool)
    check(int(keep.sum()))
    inc = _point_masks(right, q, m).T[keep] > 0
    left = [tuple(int(v) for v in p) for p in pts_all[keep]]
    return InclusionGraph(graph_id, q, m, left, right, inc, regime_ok)


def inclusion_singular_value(graph_id: str, q: int, m: int = 6,
                             cap: int = DEFAULT_VERTEX_CAP) -> tuple[float, float]:
    """``(exact second singular value, closed-form approximation)``."""
    G = inclusion_graph(graph_id, q, m, cap)
    return G.second_singular, APPROX_SECOND_SINGULAR[G.graph_id](q)


def sampling_deviation_check(graph: InclusionGraph, B_prime, E_prime) -> tuple[float, float, bool]:
    """Compare the two ways of sampling an edge next to ``B'``.

    ``lhs = |Pr_{b in B', a in N(b)}[(a,b) in E'] - Pr_{a, b in N(a) ∩ B'}[(a,b) in E']|``
    where in the second term ``a`` is uniform over the left vertices with at
    least one neighbor in ``B'``.  Returns ``(lhs, lambda/sqrt(mu), lhs <= bound)``.
    """
    inc = graph.incidence
    nA, nB = inc.shape
    bmask = np.zeros(nB, dtype=bool)
    bmask[np.asarray(B_prime, dtype=np.int64)] = True
    if not bmask.any():
        raise UsageError("B' must be nonempty")
    E = np.asarray(E_prime, dtype=bool)
    if E.shape != inc.shape:
        raise UsageError("E' must be a boolean matrix shaped like the incidence matrix")
    E = E & inc
    mu = bmask.sum() / nB
    deg_b = inc[:, bmask].sum(axis=0)
    first = float(np.mean(E[:, bmask].sum(axis=0) / deg_b))
    nb = inc[:, bmask].sum(axis=1)
    live = nb > 0
    second = float(np.mean(E[live][:, bmask].sum(axis=1) / nb[live]))
    lhs = abs(first - second)
    bound = graph.second_singular / math.sqrt(mu)
    return lhs, bound, bool(lhs <= bound + TOLERANCE)
