"""Canonical affine flats of GF(q)^n and uniform sampling of them.

A k-flat is stored as a reduced row-echelon direction basis together with the
unique base point that vanishes in every pivot column.  Two flats are the same
point set exactly when these encodings coincide.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .errors import ResourceCapError, UsageError
from .gf import FieldParams
from .linalg import nullspace, rref, rref_batch

DEFAULT_ENUMERATION_CAP = 10**6


def gaussian_binomial(n: int, k: int, q: int) -> int:
    """Number of k-dimensional linear subspaces of GF(q)^n."""
    if k < 0 or k > n:
        return 0
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def count_flats(n: int, k: int, q: int) -> int:
    return q ** (n - k) * gaussian_binomial(n, k, q)


def _reduce_base(base: np.ndarray, basis: np.ndarray, pivots: np.ndarray,
                 rank: np.ndarray, q: int) -> np.ndarray:
    """Zero the base point in each pivot column (batched)."""
    B, r, n = basis.shape
    base = base.copy() % q
    for i in range(r):
        live = rank > i
        if not live.any():
            break
        idx = np.nonzero(live)[0]
        coef = base[idx, pivots[idx, i]]
        base[idx] = (base[idx] - coef[:, None] * basis[idx, i]) % q
    return base


class FlatBatch:
    """A stack of canonical k-flats held as arrays (the vectorized twin of
    :class:`AffineFlat`)."""

    __slots__ = ("q", "base", "basis", "pivots")

    def __init__(self, q: int, base: np.ndarray, basis: np.ndarray, pivots: np.ndarray):
        self.q = q
        self.base = base
        self.basis = basis
        self.pivots = pivots

    @classmethod
    def from_spans(cls, q: int, base, dirs) -> tuple["FlatBatch", np.ndarray]:
        """Canonicalize a batch of affine spans; also returns each row's rank.

        Rows whose rank falls short of ``dirs.shape[1]`` carry garbage in the
        trailing basis rows and must be discarded by the caller.
        """
        base = np.asarray(base, dtype=np.int64)
        dirs = np.asarray(dirs, dtype=np.int64)
        B, r, n = dirs.shape
        if r == 0:
            return cls(q, base % q, dirs.copy(), np.zeros((B, 0), dtype=np.int64)), np.zeros(B, dtype=np.int64)
        R, piv, rank = rref_batch(dirs, q)
        piv = np.where(piv < 0, 0, piv)
        b = _reduce_base(base, R, piv, rank, q)
        return cls(q, b, R, piv), rank

    @classmethod
    def stack(cls, flats: Sequence["AffineFlat"]) -> "FlatBatch":
        f0 = flats[0]
        base = np.array([f.base for f in flats], dtype=np.int64).reshape(len(flats), f0.n)
        basis = np.array([f.basis for f in flats], dtype=np.int64).reshape(len(flats), f0.k, f0.n)
        piv = np.array([f.pivots for f in flats], dtype=np.int64).reshape(len(flats), f0.k)
        return cls(f0.q, base, basis, piv)

    def __len__(self):
        return self.base.shape[0]

    @property
    def n(self) -> int:
        return self.base.shape[1]

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    def take(self, idx) -> "FlatBatch":
        return FlatBatch(self.q, self.base[idx], self.basis[idx], self.pivots[idx])

    def flat(self, i: int) -> "AffineFlat":
        return AffineFlat._unchecked(self.q, self.base[i], self.basis[i], self.pivots[i])

    def flats(self) -> list["AffineFlat"]:
        return [self.flat(i) for i in range(len(self))]

    def words(self) -> np.ndarray:
        """Canonical encodings ``(n, k, basis row-major, base)`` as uint64 rows."""
        B = len(self)
        head = np.empty((B, 2), dtype=np.int64)
        head[:, 0] = self.n
        head[:, 1] = self.k
        return np.concatenate([head, self.basis.reshape(B, -1), self.base], axis=1).astype(np.uint64)

    def local_coords(self, points: np.ndarray) -> np.ndarray:
        """Canonical coordinates of points lying in the flats: ``(B, P, n) -> (B, P, k)``."""
        points = np.asarray(points, dtype=np.int64)
        idx = np.broadcast_to(self.pivots[:, None, :], points.shape[:2] + (self.k,))
        return np.take_along_axis(points, idx, axis=2)

    def embed(self, t: np.ndarray) -> np.ndarray:
        """Points from canonical coordinates: ``(B, P, k) -> (B, P, n)``."""
        t = np.asarray(t, dtype=np.int64)
        return (self.base[:, None, :] + np.einsum("bpk,bkn->bpn", t, self.basis)) % self.q

    def contains_points(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.int64) % self.q
        return (self.embed(self.local_coords(points)) == points).all(axis=-1)


@dataclass(frozen=True)
class AffineFlat:
    q: int
    n: int
    k: int
    basis: tuple
    base: tuple
    pivots: tuple

    @classmethod
    def _unchecked(cls, q, base, basis, pivots) -> "AffineFlat":
        basis = np.asarray(basis, dtype=np.int64)
        n = len(base)
        k = basis.shape[0] if basis.size else 0
        return cls(int(q), n, k,
                   tuple(tuple(int(v) for v in row) for row in basis.reshape(k, n)),
                   tuple(int(v) for v in base),
                   tuple(int(p) for p in pivots))

    # views -----------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.k

    @property
    def basis_array(self) -> np.ndarray:
        return np.array(self.basis, dtype=np.int64).reshape(self.k, self.n)

    @property
    def base_array(self) -> np.ndarray:
        return np.array(self.base, dtype=np.int64)

    def as_batch(self) -> FlatBatch:
        return FlatBatch(self.q, self.base_array[None], self.basis_array[None],
                         np.array(self.pivots, dtype=np.int64).reshape(1, self.k))

    def encode(self) -> bytes:
        """Stable byte encoding: ``(n, k, basis row-major, base)`` as little-endian u64."""
        return self.as_batch().words()[0].astype("<u8").tobytes()

    def embed(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.int64)
        return (self.base_array + t @ self.basis_array) % self.q

    def coords(self, point) -> np.ndarray:
        """Canonical coordinates of a point of the flat (no membership check)."""
        p = np.asarray(point, dtype=np.int64) % self.q
        return p[..., list(self.pivots)]

    def points(self) -> np.ndarray:
        from .poly import all_points
        return self.embed(all_points(self.k, self.q))

    def translate(self, v) -> "AffineFlat":
        return canonicalize(self.base_array + np.asarray(v, dtype=np.int64), self.basis_array, self.q)

    def contains(self, other) -> bool:
        return contains(self, other)

    def __repr__(self):
        return f"AffineFlat(q={self.q}, n={self.n}, k={self.k}, base={self.base}, basis={self.basis})"


Point = Union[Sequence[int], np.ndarray]


def canonicalize(base: Point, spanning, q: int) -> AffineFlat:
    """Canonical form of ``base + span(spanning)``; dependent vectors are dropped."""
    FieldParams(q)
    base = np.asarray(base, dtype=np.int64).reshape(-1) % q
    n = base.size
    dirs = np.asarray(spanning, dtype=np.int64).reshape(-1, n) % q if len(spanning) else np.zeros((0, n), dtype=np.int64)
    if dirs.shape[0] == 0:
        return AffineFlat._unchecked(q, base, np.zeros((0, n), dtype=np.int64), ())
    R, piv, k = rref(dirs, q)
    R = R[:k]
    batch, _ = FlatBatch.from_spans(q, base[None], R[None])
    return batch.flat(0)


def _ambient_check(a: AffineFlat, n: int):
    if a.n != n:
        raise UsageError(f"ambient dimension mismatch: {a.n} vs {n}")


def _in_direction_space(flat: AffineFlat, v: np.ndarray) -> bool:
    v = np.asarray(v, dtype=np.int64) % flat.q
    if flat.k == 0:
        return not v.any()
    c = v[list(flat.pivots)]
    return bool(((c @ flat.basis_array) % flat.q == v).all())


def contains(flat: AffineFlat, other) -> bool:
    """Containment of a point or of another flat."""
    if isinstance(other, AffineFlat):
        _ambient_check(other, flat.n)
        if other.q != flat.q:
            raise UsageError("mixed moduli")
        if not contains(flat, other.base_array):
            return False
        return all(_in_direction_space(flat, row) for row in other.basis_array)
    p = np.asarray(other, dtype=np.int64).reshape(-1)
    if p.size != flat.n:
        raise UsageError(f"point has {p.size} coordinates, flat lives in dimension {flat.n}")
    return _in_direction_space(flat, p - flat.base_array)


def affine_span(objects, q: int, n: Optional[int] = None) -> Optional[AffineFlat]:
    """Smallest flat containing all given points and flats (``None`` if no objects)."""
    base = None
    dirs = []
    for obj in objects:
        if isinstance(obj, AffineFlat):
            if n is not None:
                _ambient_check(obj, n)
            p = obj.base_array
            dirs.extend(obj.basis_array)
        else:
            p = np.asarray(obj, dtype=np.int64).reshape(-1) % q
            if n is not None and p.size != n:
                raise UsageError(f"point has {p.size} coordinates, expected {n}")
        if base is None:
            base = p
        else:
            dirs.append((p - base) % q)
    if base is None:
        return None
    return canonicalize(base, dirs, q)


def intersect(a: AffineFlat, b: AffineFlat) -> Optional[AffineFlat]:
    """Canonical intersection, or ``None`` when the flats are disjoint."""
    _ambient_check(b, a.n)
    q = a.q
    A, Bm = a.basis_array, b.basis_array
    # base_a + s A = base_b + t B
    M = np.concatenate([A.T, (-Bm.T) % q], axis=1) if a.k + b.k else np.zeros((a.n, 0), dtype=np.int64)
    rhs = (b.base_array - a.base_array) % q
    c = M.shape[1]
    aug = np.concatenate([M, rhs[:, None]], axis=1)
    R, piv, k = rref(aug, q, ncols=c)
    if (R[k:, c] != 0).any():
        return None
    sol = np.zeros(c, dtype=np.int64)
    sol[piv] = R[:k, c]
    point = (a.base_array + sol[:a.k] @ A) % q
    if c == 0:
        return canonicalize(point, [], q)
    null = nullspace(M, q)
    dirs = (null[:, :a.k] @ A) % q if len(null) else np.zeros((0, a.n), dtype=np.int64)
    return canonicalize(point, dirs, q)


def intersection_dim(a: AffineFlat, b: AffineFlat) -> int:
    c = intersect(a, b)
    return -1 if c is None else c.k


@dataclass(frozen=True)
class FlatPair:
    first: AffineFlat
    second: AffineFlat
    intersection_dim: int
    through: Optional[AffineFlat] = None


# ---------------------------------------------------------------------------
# sampling

def complete_batch(rng: np.random.Generator, q: int, base, fixed, k: int,
                   ambient=None, max_rounds: int = 10_000) -> FlatBatch:
    """Uniform k-flats through ``base`` whose direction space contains ``fixed``.

    ``fixed`` has shape ``(B, f, n)`` and must be independent per row.  Extra
    directions are uniform vectors (or uniform combinations of the rows of
    ``ambient``, to stay inside a given flat); rows whose draw is dependent
    are redrawn.
    """
    base = np.asarray(base, dtype=np.int64)
    B, n = base.shape
    fixed = np.asarray(fixed, dtype=np.int64).reshape(B, -1, n)
    f = fixed.shape[1]
    extra = k - f
    if extra < 0:
        raise UsageError(f"{f} fixed directions exceed flat dimension {k}")
    out_basis = np.zeros((B, k, n), dtype=np.int64)
    out_base = np.zeros((B, n), dtype=np.int64)
    out_piv = np.zeros((B, k), dtype=np.int64)
    todo = np.arange(B)
    for _ in range(max_rounds):
        m = len(todo)
        if ambient is None:
            new = rng.integers(0, q, size=(m, extra, n), dtype=np.int64)
        else:
            amb = np.asarray(ambient, dtype=np.int64)
            if amb.ndim == 2:
                coef = rng.integers(0, q, size=(m, extra, amb.shape[0]), dtype=np.int64)
                new = coef @ amb % q
            else:
                coef = rng.integers(0, q, size=(m, extra, amb.shape[1]), dtype=np.int64)
                new = np.einsum("bea,ban->ben", coef, amb[todo]) % q
        dirs = np.concatenate([fixed[todo], new], axis=1)
        batch, rank = FlatBatch.from_spans(q, base[todo], dirs)
        good = rank == k
        g = todo[good]
        out_basis[g] = batch.basis[good]
        out_base[g] = batch.base[good]
        out_piv[g] = batch.pivots[good]
        todo = todo[~good]
        if len(todo) == 0:
            return FlatBatch(q, out_base, out_basis, out_piv)
    raise UsageError("could not complete flats: constraints are degenerate")


def sample_flats_batch(rng: np.random.Generator, q: int, n: int, k: int, size: int) -> FlatBatch:
    """``size`` independent uniform k-flats of GF(q)^n."""
    base = rng.integers(0, q, size=(size, n), dtype=np.int64)
    return complete_batch(rng, q, base, np.zeros((size, 0, n), dtype=np.int64), k)


def sample_flat(n: int, k: int, rng: np.random.Generator, q: int,
                containing: Sequence = (), within: Optional[AffineFlat] = None) -> AffineFlat:
    """Uniform k-flat of GF(q)^n containing every given point/flat, optionally
    inside ``within``."""
    if not 0 <= k <= n:
        raise UsageError(f"need 0 <= k <= n, got k={k}, n={n}")
    span = affine_span(list(containing), q, n)
    if within is not None:
        _ambient_check(within, n)
        if k > within.k:
            raise UsageError(f"cannot fit a {k}-flat inside a {within.k}-flat")
        if span is not None and not contains(within, span):
            raise UsageError("constraints are not inside the ambient flat")
    if span is not None and span.k > k:
        raise UsageError(f"constraints span dimension {span.k} > {k}")
    if span is None:
        if within is None:
            base = rng.integers(0, q, size=n, dtype=np.int64)
        else:
            base = within.embed(rng.integers(0, q, size=within.k, dtype=np.int64))
        fixed = np.zeros((0, n), dtype=np.int64)
    else:
        base = span.base_array
        fixed = span.basis_array
    amb = None if within is None else within.basis_array
    batch = complete_batch(rng, q, base[None], fixed[None], k, ambient=amb)
    return batch.flat(0)


def sample_edge(n: int, k: int, ell: int, rng: np.random.Generator, q: int,
                through: Sequence = ()) -> FlatPair:
    """Uniform ell-flat U (containing ``through``) and two independent uniform
    k-flats containing U."""
    if not 0 <= ell < k <= n:
        raise UsageError(f"need 0 <= ell < k <= n, got ell={ell}, k={k}, n={n}")
    U = sample_flat(n, ell, rng, q, containing=through)
    V1 = sample_flat(n, k, rng, q, containing=[U])
    V2 = sample_flat(n, k, rng, q, containing=[U])
    return FlatPair(V1, V2, intersection_dim(V1, V2), through=U)


def sample_edge_batch(rng: np.random.Generator, q: int, n: int, k: int, ell: int, size: int):
    """Batched :func:`sample_edge`; returns ``(U, V1, V2)`` as :class:`FlatBatch`."""
    U = sample_flats_batch(rng, q, n, ell, size)
    V1 = complete_batch(rng, q, U.base, U.basis, k)
    V2 = complete_batch(rng, q, U.base, U.basis, k)
    return U, V1, V2


# ---------------------------------------------------------------------------
# enumeration

def linear_subspaces(n: int, k: int, q: int) -> Iterator[np.ndarray]:
    """Every k-dimensional subspace of GF(q)^n, as its RREF basis ``(k, n)``."""
    for piv in itertools.combinations(range(n), k):
        pset = set(piv)
        free = [(i, j) for i, p in enumerate(piv) for j in range(p + 1, n) if j not in pset]
        for vals in itertools.product(range(q), repeat=len(free)):
            M = np.zeros((k, n), dtype=np.int64)
            for i, p in enumerate(piv):
                M[i, p] = 1
            for (i, j), v in zip(free, vals):
                M[i, j] = v
            yield M


def _enumerate_free(n: int, k: int, q: int, containing: Optional[AffineFlat]):
    """Yield (base, basis) pairs for k-flats of GF(q)^n containing ``containing``."""
    if containing is None:
        for S in linear_subspaces(n, k, q):
            piv = [int(np.nonzero(r)[0][0]) for r in S]
            npc = [j for j in range(n) if j not in piv]
            for vals in itertools.product(range(q), repeat=len(npc)):
                base = np.zeros(n, dtype=np.int64)
                base[npc] = vals
                yield base, S
        return
    f = containing.k
    fpiv = list(containing.pivots)
    npc = [j for j in range(n) if j not in fpiv]
    D = containing.basis_array
    for S in linear_subspaces(n - f, k - f, q):
        lifted = np.zeros((k - f, n), dtype=np.int64)
        lifted[:, npc] = S
        yield containing.base_array, np.concatenate([D, lifted], axis=0)


def count_flats_constrained(n: int, k: int, q: int, within: Optional[AffineFlat] = None,
                            containing: Optional[AffineFlat] = None) -> int:
    m = n if within is None else within.k
    f = -1 if containing is None else containing.k
    if containing is None:
        return count_flats(m, k, q)
    if k < f:
        return 0
    return gaussian_binomial(m - f, k - f, q)


def enumerate_flats(n: int, k: int, q: int, within: Optional[AffineFlat] = None,
                    containing=None, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[AffineFlat]:
    """Each k-flat (inside ``within``, containing ``containing``) exactly once."""
    if containing is not None and not isinstance(containing, AffineFlat):
        containing = canonicalize(containing, [], q)
    if containing is not None:
        _ambient_check(containing, n)
    if within is not None:
        _ambient_check(within, n)
        if containing is not None and not contains(within, containing):
            return iter(())
    if containing is not None and containing.k > k:
        return iter(())
    total = count_flats_constrained(n, k, q, within, containing)
    if total > cap:
        raise ResourceCapError(f"{total} flats exceed enumeration cap {cap}", total, cap)
    return _enumerate(n, k, q, within, containing)


def _enumerate(n, k, q, within, containing):
    if within is None:
        for base, dirs in _enumerate_free(n, k, q, containing):
            yield canonicalize(base, dirs, q)
        return
    W = within.basis_array
    local = None
    if containing is not None:
        local = canonicalize(within.coords(containing.base_array),
                             [within.coords(r) for r in containing.basis_array], q)
    for base, dirs in _enumerate_free(within.k, k, q, local):
        yield canonicalize(within.embed(base), (dirs @ W) % q if len(dirs) else [], q)
