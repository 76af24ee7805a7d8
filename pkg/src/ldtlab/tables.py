"""Tables assigning a degree-d local polynomial to every k-flat.

Tables are implicit: an entry is computed on demand from the table's payload
and a keyed hash of the flat's canonical encoding, so the same flat always
gets the same answer regardless of query order or worker.

Every table answers two kinds of request:

* ``query(flat)`` returns the entry as a :class:`MultiPoly` in the flat's
  canonical coordinates;
* ``values(batch, points)`` evaluates the entries of a :class:`FlatBatch` at
  points lying in the respective flats, which is what the Monte Carlo code
  uses.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import prf
from .errors import UsageError
from .geometry import AffineFlat, FlatBatch, canonicalize, sample_flat, sample_flats_batch
from .gf import FieldParams, make_rng
from .linalg import nullspace
from .poly import MultiPoly, evaluate_coeffs, num_monomials, random_poly, simplex_lattice
from .stats import Estimate, chunked_count

DEFAULT_PLANTED_C = 0.25


class CubesTable:
    """Base class; ``k`` is the dimension of the flats the table is defined on."""

    kind = "abstract"

    def __init__(self, q: int, n: int, d: int, k: int = 3, seed: int = 0):
        FieldParams(q)
        if not 0 <= k <= n:
            raise UsageError(f"table dimension k={k} must lie in [0, n={n}]")
        if d < 0 or d >= q:
            raise UsageError(f"need 0 <= d < q (d={d}, q={q})")
        self.q, self.n, self.d, self.k = q, n, d, k
        self.seed = int(seed)

    @property
    def num_local_coeffs(self) -> int:
        return num_monomials(self.k, self.d)

    def _check_flat(self, flat: AffineFlat):
        if flat.n != self.n or flat.k != self.k or flat.q != self.q:
            raise UsageError(
                f"table is defined on {self.k}-flats of GF({self.q})^{self.n}, "
                f"got a {flat.k}-flat of GF({flat.q})^{flat.n}")

    def _check_batch(self, flats: FlatBatch):
        if flats.n != self.n or flats.k != self.k:
            raise UsageError(f"table is defined on {self.k}-flats in dimension {self.n}, "
                             f"got {flats.k}-flats in dimension {flats.n}")

    def keys(self, flats: FlatBatch) -> np.ndarray:
        return prf.hash_words(self.seed, flats.words())

    def random_local_coeffs(self, keys: np.ndarray, start: int = 1) -> np.ndarray:
        return prf.uniform_residues(keys, start, self.num_local_coeffs, self.q)

    def query(self, flat: AffineFlat) -> MultiPoly:
        raise NotImplementedError

    def values(self, flats: FlatBatch, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value_at(self, flat: AffineFlat, point) -> int:
        pts = np.asarray(point, dtype=np.int64).reshape(1, 1, self.n)
        return int(self.values(flat.as_batch(), pts)[0, 0])

    def lattice_values(self, flats: FlatBatch) -> np.ndarray:
        """Entries on each flat's unisolvent lattice; equal rows mean equal polynomials."""
        t = np.broadcast_to(simplex_lattice(self.k, self.d), (len(flats),) + simplex_lattice(self.k, self.d).shape)
        return self.values(flats, flats.embed(t))

    # serialization -----------------------------------------------------------
    def payload(self) -> dict:
        return {}

    def descriptor(self) -> dict:
        return {"kind": self.kind, "q": self.q, "n": self.n, "d": self.d, "k": self.k,
                "seed": self.seed, "payload": self.payload()}

    def to_json(self) -> str:
        return json.dumps(self.descriptor(), indent=1, sort_keys=True)

    def __repr__(self):
        return f"{type(self).__name__}(q={self.q}, n={self.n}, d={self.d}, k={self.k}, seed={self.seed})"


class HonestTable(CubesTable):
    """Entries are restrictions of one global polynomial."""

    kind = "honest"

    def __init__(self, g: MultiPoly, d: Optional[int] = None, k: int = 3, seed: int = 0):
        d = g.degree_bound if d is None else d
        if g.degree() > d:
            raise UsageError(f"global polynomial has degree {g.degree()} > {d}")
        super().__init__(g.q, g.nvars, d, k, seed)
        self.g = g.with_degree_bound(d)

    def query(self, flat):
        self._check_flat(flat)
        return self.g.restrict(flat)

    def values(self, flats, points):
        self._check_batch(flats)
        return self.g.evaluate_batch(points)

    def payload(self):
        return {"g": self.g.to_record()}


class CorruptedTable(HonestTable):
    """Each flat is corrupted independently with probability ``rho``; corrupted
    flats answer a uniformly random local polynomial."""

    kind = "corrupted"

    def __init__(self, g: MultiPoly, rho: float, seed: int = 0, d: Optional[int] = None, k: int = 3):
        if not 0.0 <= rho <= 1.0:
            raise UsageError(f"corruption rate must be in [0, 1], got {rho}")
        super().__init__(g, d=d, k=k, seed=seed)
        self.rho = float(rho)

    def corrupted(self, flats: FlatBatch, keys: Optional[np.ndarray] = None) -> np.ndarray:
        keys = self.keys(flats) if keys is None else keys
        return prf.uniform_unit(keys, 0) < self.rho

    def is_corrupted(self, flat: AffineFlat) -> bool:
        self._check_flat(flat)
        return bool(self.corrupted(flat.as_batch())[0])

    def query(self, flat):
        self._check_flat(flat)
        keys = self.keys(flat.as_batch())
        if prf.uniform_unit(keys, 0)[0] < self.rho:
            return MultiPoly(self.q, self.k, self.d, tuple(self.random_local_coeffs(keys)[0].tolist()))
        return self.g.restrict(flat)

    def values(self, flats, points):
        self._check_batch(flats)
        out = self.g.evaluate_batch(points)
        if self.rho == 0.0:
            return out
        keys = self.keys(flats)
        bad = self.corrupted(flats, keys)
        if bad.any():
            idx = np.nonzero(bad)[0]
            coeffs = self.random_local_coeffs(keys[idx])
            local = flats.take(idx).local_coords(points[idx])
            out[idx] = evaluate_coeffs(coeffs, local, self.k, self.d, self.q)
        return out

    def payload(self):
        return {"g": self.g.to_record(), "rho": self.rho}


@dataclass
class PlantedSpec:
    """Hyperplanes ``W_i`` with hidden polynomials ``f_i`` in their canonical coordinates."""

    q: int
    n: int
    d: int
    c: float
    hyperplanes: list = field(default_factory=list)
    hidden_polys: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.hyperplanes) != len(self.hidden_polys):
            raise UsageError("one hidden polynomial per hyperplane is required")
        if not self.hyperplanes:
            raise UsageError("a planted table needs at least one hyperplane")
        for W, f in zip(self.hyperplanes, self.hidden_polys):
            if W.k != self.n - 1 or W.n != self.n:
                raise UsageError("every W_i must be a hyperplane of GF(q)^n")
            if f.nvars != self.n - 1 or f.degree() > self.d:
                raise UsageError("hidden polynomials must be (n-1)-variate of degree <= d")

    @property
    def h(self) -> int:
        return len(self.hyperplanes)

    @staticmethod
    def count_for(q: int, c: float) -> int:
        return max(1, int(round(c * q**3)))

    @classmethod
    def random(cls, q: int, n: int, d: int, c: float = DEFAULT_PLANTED_C,
               rng: Optional[np.random.Generator] = None, seed: int = 0) -> "PlantedSpec":
        """``round(c q^3)`` uniform hyperplanes, sampled with replacement."""
        rng = make_rng(seed, 0xC0DE) if rng is None else rng
        h = cls.count_for(q, c)
        Ws = [sample_flat(n, n - 1, rng, q) for _ in range(h)]
        fs = [random_poly(n - 1, d, q, rng) for _ in range(h)]
        return cls(q, n, d, c, Ws, fs)


class PlantedTable(CubesTable):
    """Flats inside some ``W_i`` answer ``f_i`` for the smallest such ``i``;
    all others answer a keyed random local polynomial."""

    kind = "planted"

    def __init__(self, spec: PlantedSpec, seed: int = 0, k: int = 3):
        super().__init__(spec.q, spec.n, spec.d, k, seed)
        if k > spec.n - 1:
            raise UsageError("flats must fit inside the hyperplanes")
        self.spec = spec
        q = spec.q
        normals, offsets = [], []
        for W in spec.hyperplanes:
            a = nullspace(W.basis_array, q)[0]
            normals.append(a)
            offsets.append(int(a @ W.base_array % q))
        self._normals = np.array(normals, dtype=np.int64)       # (h, n)
        self._offsets = np.array(offsets, dtype=np.int64)       # (h,)
        self._wpiv = np.array([W.pivots for W in spec.hyperplanes], dtype=np.int64)  # (h, n-1)
        self._fcoef = np.array([f.with_degree_bound(spec.d).coeffs for f in spec.hidden_polys],
                               dtype=np.int64)                  # (h, M)

    def cover_index(self, flats: FlatBatch) -> np.ndarray:
        """Smallest ``i`` with the flat inside ``W_i``, or ``-1``."""
        q = self.q
        base_ok = (flats.base @ self._normals.T) % q == self._offsets[None, :]
        dirs_ok = ((flats.basis @ self._normals.T) % q == 0).all(axis=1)
        inside = base_ok & dirs_ok
        return np.where(inside.any(axis=1), inside.argmax(axis=1), -1)

    def query(self, flat):
        self._check_flat(flat)
        i = int(self.cover_index(flat.as_batch())[0])
        if i >= 0:
            piv = list(self.spec.hyperplanes[i].pivots)
            f = self.spec.hidden_polys[i].with_degree_bound(self.d)
            return f.compose_affine(flat.base_array[piv], flat.basis_array[:, piv])
        keys = self.keys(flat.as_batch())
        return MultiPoly(self.q, self.k, self.d, tuple(self.random_local_coeffs(keys)[0].tolist()))

    def values(self, flats, points):
        self._check_batch(flats)
        points = np.asarray(points, dtype=np.int64)
        out = np.empty(points.shape[:2], dtype=np.int64)
        cov = self.cover_index(flats)
        hit = cov >= 0
        if hit.any():
            idx = np.nonzero(hit)[0]
            w = cov[idx]
            piv = self._wpiv[w]                                          # (b, n-1)
            wp = np.take_along_axis(points[idx], np.broadcast_to(
                piv[:, None, :], (len(idx), points.shape[1], self.n - 1)), axis=2)
            out[idx] = evaluate_coeffs(self._fcoef[w], wp, self.n - 1, self.d, self.q)
        if (~hit).any():
            idx = np.nonzero(~hit)[0]
            sub = flats.take(idx)
            coeffs = self.random_local_coeffs(self.keys(sub))
            out[idx] = evaluate_coeffs(coeffs, sub.local_coords(points[idx]), self.k, self.d, self.q)
        return out

    def payload(self):
        s = self.spec
        return {"c": s.c,
                "hyperplanes": [{"base": list(W.base), "basis": [list(r) for r in W.basis]}
                                for W in s.hyperplanes],
                "hidden_polys": [f.to_record() for f in s.hidden_polys]}


class ExplicitTable(CubesTable):
    """A finite dictionary of entries, optionally backed by another table."""

    kind = "explicit"

    def __init__(self, q, n, d, k, entries: dict, fallback: Optional[CubesTable] = None, seed: int = 0):
        super().__init__(q, n, d, k, seed)
        self.entries = {}
        for flat, p in entries.items():
            self._check_flat(flat)
            if p.nvars != k or p.degree() > d:
                raise UsageError("entries must be k-variate polynomials of degree <= d")
            self.entries[flat] = p.with_degree_bound(d)
        self.fallback = fallback

    def query(self, flat):
        self._check_flat(flat)
        if flat in self.entries:
            return self.entries[flat]
        if self.fallback is None:
            raise KeyError(f"no entry for {flat}")
        return self.fallback.query(flat)

    def values(self, flats, points):
        self._check_batch(flats)
        points = np.asarray(points, dtype=np.int64)
        out = np.empty(points.shape[:2], dtype=np.int64)
        miss = []
        for i in range(len(flats)):
            f = flats.flat(i)
            p = self.entries.get(f)
            if p is None:
                miss.append(i)
                continue
            out[i] = p.evaluate_batch(f.coords(points[i]))
        if miss:
            if self.fallback is None:
                raise KeyError(f"no entry for {flats.flat(miss[0])}")
            idx = np.array(miss)
            out[idx] = self.fallback.values(flats.take(idx), points[idx])
        return out

    def payload(self):
        out = {"entries": [{"base": list(f.base), "basis": [list(r) for r in f.basis],
                            "poly": p.to_record()} for f, p in self.entries.items()]}
        if self.fallback is not None:
            out["fallback"] = self.fallback.descriptor()
        return out


# ---------------------------------------------------------------------------
# constructors matching the operation names

def honest_table(g: MultiPoly, d: Optional[int] = None, k: int = 3, seed: int = 0) -> HonestTable:
    return HonestTable(g, d=d, k=k, seed=seed)


def corrupted_table(g: MultiPoly, rho: float, seed: int = 0, d: Optional[int] = None, k: int = 3) -> CorruptedTable:
    return CorruptedTable(g, rho, seed=seed, d=d, k=k)


def planted_table(spec: PlantedSpec, seed: int = 0, k: int = 3) -> PlantedTable:
    return PlantedTable(spec, seed=seed, k=k)


def table_from_descriptor(desc) -> CubesTable:
    if isinstance(desc, str):
        desc = json.loads(desc)
    kind = desc.get("kind")
    q, n, d, k, seed = (int(desc[x]) for x in ("q", "n", "d", "k", "seed"))
    pl = desc.get("payload", {})
    if kind == "honest":
        return HonestTable(MultiPoly.from_record(pl["g"]), d=d, k=k, seed=seed)
    if kind == "corrupted":
        return CorruptedTable(MultiPoly.from_record(pl["g"]), float(pl["rho"]), seed=seed, d=d, k=k)
    if kind == "planted":
        Ws = [canonicalize(w["base"], w["basis"], q) for w in pl["hyperplanes"]]
        fs = [MultiPoly.from_record(r) for r in pl["hidden_polys"]]
        return PlantedTable(PlantedSpec(q, n, d, float(pl["c"]), Ws, fs), seed=seed, k=k)
    if kind == "explicit":
        entries = {canonicalize(e["base"], e["basis"], q): MultiPoly.from_record(e["poly"])
                   for e in pl["entries"]}
        fb = table_from_descriptor(pl["fallback"]) if "fallback" in pl else None
        return ExplicitTable(q, n, d, k, entries, fallback=fb, seed=seed)
    raise UsageError(f"unknown table kind {kind!r}")


def table_agreement(table: CubesTable, g: MultiPoly, trials: int, seed: int = 0,
                    threads: int = 1, chunk: int = 8192) -> Estimate:
    """Estimate ``Pr_C[T(C) = g|_C]`` over uniform flats ``C``."""
    if trials < 1:
        raise UsageError("trials must be >= 1")
    if g.nvars != table.n or g.q != table.q:
        raise UsageError("polynomial does not live on the table's space")
    if g.degree() > table.d:
        raise UsageError(f"polynomial degree {g.degree()} exceeds table degree {table.d}")
    lat = simplex_lattice(table.k, table.d)

    def run(i, size):
        rng = make_rng(seed, i)
        flats = sample_flats_batch(rng, table.q, table.n, table.k, size)
        pts = flats.embed(np.broadcast_to(lat, (size,) + lat.shape))
        return int((table.values(flats, pts) == g.evaluate_batch(pts)).all(axis=1).sum())

    return Estimate(chunked_count(run, trials, chunk, threads), trials)
