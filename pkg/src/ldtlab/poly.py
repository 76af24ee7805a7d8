"""Dense multivariate polynomials of bounded total degree over GF(q).

Coefficients are stored densely in graded-lex order: monomials sorted by total
degree, and within one degree by exponent vector in descending lexicographic
order (``x1^2 > x1*x2 > x2^2``).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .errors import InsufficientDataError, NoFitError, UsageError
from .gf import FieldElement, FieldParams
from .linalg import rref

DEFAULT_EXHAUSTIVE_CAP = 10**7


@lru_cache(maxsize=None)
def monomials(m: int, d: int) -> tuple[tuple[int, ...], ...]:
    """Exponent vectors in ``m`` variables of total degree ``<= d``, graded-lex."""
    out = []
    for deg in range(d + 1):
        level = [e for e in itertools.product(range(deg, -1, -1), repeat=m) if sum(e) == deg]
        level.sort(reverse=True)
        out.extend(level)
    return tuple(out)


@lru_cache(maxsize=None)
def exponent_array(m: int, d: int) -> np.ndarray:
    mons = monomials(m, d)
    arr = np.array(mons, dtype=np.int64).reshape(len(mons), m)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def monomial_index(m: int, d: int) -> dict:
    return {e: i for i, e in enumerate(monomials(m, d))}


def num_monomials(m: int, d: int) -> int:
    return comb(m + d, d)


def monomial_values(points: np.ndarray, m: int, d: int, q: int) -> np.ndarray:
    """Values of every monomial at every point: ``(..., m) -> (..., M)``."""
    points = np.asarray(points, dtype=np.int64) % q
    if points.shape[-1] != m:
        raise UsageError(f"points have {points.shape[-1]} coordinates, expected {m}")
    exps = exponent_array(m, d)
    powers = np.empty(points.shape + (d + 1,), dtype=np.int64)
    powers[..., 0] = 1
    for e in range(1, d + 1):
        powers[..., e] = powers[..., e - 1] * points % q
    out = np.ones(points.shape[:-1] + (len(exps),), dtype=np.int64)
    for i in range(m):
        out = out * powers[..., i, :][..., exps[:, i]] % q
    return out


def evaluate_coeffs(coeffs: np.ndarray, points: np.ndarray, m: int, d: int, q: int) -> np.ndarray:
    """Evaluate stacked coefficient vectors at stacked point sets.

    ``coeffs`` has shape ``(..., M)`` and ``points`` ``(..., P, m)`` with
    matching leading axes; the result has shape ``(..., P)``.
    """
    mono = monomial_values(points, m, d, q)
    c = np.asarray(coeffs, dtype=np.int64)[..., None, :]
    return (mono * c % q).sum(axis=-1) % q


def simplex_lattice(k: int, d: int) -> np.ndarray:
    """Points ``t`` with nonnegative integer entries and ``sum(t) <= d``.

    For ``d < q`` a polynomial of total degree ``<= d`` in ``k`` variables is
    determined by its values on this set, so two such polynomials are equal
    iff they agree there.
    """
    return exponent_array(k, d).copy()


# ---------------------------------------------------------------------------
# sparse helpers for symbolic substitution

def _dmul(a: dict, b: dict, q: int) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = (out.get(e, 0) + ca * cb) % q
    return {e: c for e, c in out.items() if c}


@dataclass(frozen=True, eq=False)
class MultiPoly:
    q: int
    nvars: int
    degree_bound: int
    coeffs: tuple

    def __post_init__(self):
        if self.nvars < 0 or self.degree_bound < 0:
            raise UsageError("nvars and degree_bound must be nonnegative")
        M = num_monomials(self.nvars, self.degree_bound)
        c = tuple(int(v) % self.q for v in self.coeffs)
        if len(c) != M:
            raise UsageError(f"expected {M} coefficients, got {len(c)}")
        object.__setattr__(self, "coeffs", c)

    # construction -----------------------------------------------------------
    @classmethod
    def zero(cls, q, nvars, d):
        return cls(q, nvars, d, (0,) * num_monomials(nvars, d))

    @classmethod
    def constant(cls, q, nvars, d, value):
        c = [0] * num_monomials(nvars, d)
        c[0] = int(value) % q
        return cls(q, nvars, d, tuple(c))

    @classmethod
    def from_terms(cls, q, nvars, d, terms: dict):
        idx = monomial_index(nvars, d)
        c = [0] * len(idx)
        for e, v in terms.items():
            e = tuple(int(x) for x in e)
            if len(e) != nvars:
                raise UsageError(f"exponent {e} has wrong length for {nvars} variables")
            if sum(e) > d:
                raise UsageError(f"monomial {e} exceeds degree bound {d}")
            c[idx[e]] = (c[idx[e]] + int(v)) % q
        return cls(q, nvars, d, tuple(c))

    @classmethod
    def variable(cls, q, nvars, d, i):
        e = [0] * nvars
        e[i] = 1
        return cls.from_terms(q, nvars, max(d, 1), {tuple(e): 1})

    # views -------------------------------------------------------------------
    @property
    def field(self) -> FieldParams:
        return FieldParams(self.q)

    @property
    def coeff_array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=np.int64)

    def terms(self) -> dict:
        return {e: c for e, c in zip(monomials(self.nvars, self.degree_bound), self.coeffs) if c}

    def degree(self) -> int:
        """Actual total degree (``-1`` for the zero polynomial)."""
        t = self.terms()
        return max((sum(e) for e in t), default=-1)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def with_degree_bound(self, d: int) -> "MultiPoly":
        if d == self.degree_bound:
            return self
        if self.degree() > d:
            raise UsageError(f"polynomial of degree {self.degree()} does not fit bound {d}")
        return MultiPoly.from_terms(self.q, self.nvars, d, self.terms())

    def _check_compatible(self, other: "MultiPoly"):
        if not isinstance(other, MultiPoly):
            raise UsageError("expected a MultiPoly")
        if other.q != self.q:
            raise UsageError(f"mixed moduli: GF({self.q}) and GF({other.q})")
        if other.nvars != self.nvars:
            raise UsageError(f"variable count mismatch: {self.nvars} vs {other.nvars}")

    # equality ------------------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return (self.q == other.q and self.nvars == other.nvars
                and self.terms() == other.terms())

    def __hash__(self):
        return hash((self.q, self.nvars, frozenset(self.terms().items())))

    # arithmetic ----------------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, np.integer, FieldElement)):
            other = MultiPoly.constant(self.q, self.nvars, self.degree_bound, int(other))
        self._check_compatible(other)
        d = max(self.degree_bound, other.degree_bound)
        a, b = self.with_degree_bound(d), other.with_degree_bound(d)
        return MultiPoly(self.q, self.nvars, d, tuple(x + y for x, y in zip(a.coeffs, b.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.q, self.nvars, self.degree_bound, tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        if isinstance(other, (int, np.integer, FieldElement)):
            return self + (-int(other))
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, np.integer, FieldElement)):
            s = int(other)
            return MultiPoly(self.q, self.nvars, self.degree_bound, tuple(c * s for c in self.coeffs))
        self._check_compatible(other)
        prod = _dmul(self.terms(), other.terms(), self.q)
        return MultiPoly.from_terms(self.q, self.nvars, self.degree_bound + other.degree_bound, prod)

    __rmul__ = __mul__

    # evaluation ----------------------------------------------------------------
    def evaluate(self, point) -> FieldElement:
        pt = [int(v) for v in point]
        if len(pt) != self.nvars:
            raise UsageError(f"point has {len(pt)} coordinates, expected {self.nvars}")
        return FieldElement(int(self.evaluate_batch(np.array([pt]))[0]), self.field)

    def evaluate_batch(self, points) -> np.ndarray:
        """Evaluate at an array of points of shape ``(..., nvars)``."""
        points = np.asarray(points, dtype=np.int64)
        if points.shape[-1] != self.nvars:
            raise UsageError(f"points have {points.shape[-1]} coordinates, expected {self.nvars}")
        mono = monomial_values(points, self.nvars, self.degree_bound, self.q)
        return (mono * self.coeff_array % self.q).sum(axis=-1) % self.q

    def __call__(self, *point):
        if len(point) == 1 and not isinstance(point[0], (int, np.integer, FieldElement)):
            point = tuple(point[0])
        return self.evaluate(point)

    # substitution --------------------------------------------------------------
    def compose_affine(self, base, directions) -> "MultiPoly":
        """``t -> p(base + sum_j t_j directions[j])`` as a polynomial in ``t``.

        Expanded symbolically, so no ``d < q`` assumption is needed.
        """
        base = np.asarray(base, dtype=np.int64).reshape(-1) % self.q
        dirs = np.asarray(directions, dtype=np.int64).reshape(-1, base.size) % self.q
        if base.size != self.nvars:
            raise UsageError(f"base has {base.size} coordinates, expected {self.nvars}")
        k = dirs.shape[0]
        q = self.q
        zero = (0,) * k
        forms = []
        for i in range(self.nvars):
            f = {zero: int(base[i])} if base[i] else {}
            for j in range(k):
                if dirs[j, i]:
                    e = [0] * k
                    e[j] = 1
                    f[tuple(e)] = int(dirs[j, i])
            forms.append(f)
        powers = [[{zero: 1 % q}] for _ in range(self.nvars)]
        out: dict = {}
        for e, c in self.terms().items():
            term = {zero: c}
            for i, ei in enumerate(e):
                while len(powers[i]) <= ei:
                    powers[i].append(_dmul(powers[i][-1], forms[i], q))
                if ei:
                    term = _dmul(term, powers[i][ei], q)
            for te, tc in term.items():
                out[te] = (out.get(te, 0) + tc) % q
        return MultiPoly.from_terms(q, k, self.degree_bound, out)

    def restrict(self, flat) -> "MultiPoly":
        """Restriction to an affine flat, in the flat's canonical coordinates."""
        if flat.n != self.nvars:
            raise UsageError(f"flat lives in GF(q)^{flat.n}, polynomial has {self.nvars} variables")
        if flat.q != self.q:
            raise UsageError(f"mixed moduli: GF({self.q}) and GF({flat.q})")
        return self.compose_affine(flat.base, np.asarray(flat.basis, dtype=np.int64).reshape(flat.k, flat.n))

    # serialization ---------------------------------------------------------------
    def to_record(self) -> str:
        lines = [f"q={self.q} m={self.nvars} d={self.degree_bound}"]
        for e, c in zip(monomials(self.nvars, self.degree_bound), self.coeffs):
            if c:
                lines.append(" ".join(map(str, e)) + f" : {c}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_record(cls, text: str) -> "MultiPoly":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines:
            raise UsageError("empty polynomial record")
        header = dict(tok.split("=") for tok in lines[0].split())
        try:
            q, m, d = int(header["q"]), int(header["m"]), int(header["d"])
        except KeyError as exc:
            raise UsageError(f"bad polynomial header {lines[0]!r}") from exc
        terms = {}
        for ln in lines[1:]:
            lhs, rhs = ln.split(":")
            e = tuple(int(x) for x in lhs.split())
            if e in terms:
                raise UsageError(f"duplicate monomial {e} in record")
            terms[e] = int(rhs)
        return cls.from_terms(q, m, d, terms)

    def __repr__(self):
        t = self.terms()
        if not t:
            return f"MultiPoly(0, q={self.q}, m={self.nvars}, d={self.degree_bound})"
        parts = []
        for e, c in t.items():
            mono = "*".join(f"x{i + 1}" + (f"^{p}" if p > 1 else "") for i, p in enumerate(e) if p)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return f"MultiPoly({' + '.join(parts)}, q={self.q})"


def random_poly(m: int, d: int, q: int, rng: np.random.Generator) -> MultiPoly:
    """Uniform coefficients over all ``C(m+d, d)`` monomials."""
    return MultiPoly(q, m, d, tuple(rng.integers(0, q, size=num_monomials(m, d)).tolist()))


def evaluate(p: MultiPoly, point) -> FieldElement:
    return p.evaluate(point)


def restrict(p: MultiPoly, flat) -> MultiPoly:
    return p.restrict(flat)


def all_points(m: int, q: int) -> np.ndarray:
    """Every point of GF(q)^m, shape ``(q**m, m)``."""
    if m == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*([np.arange(q, dtype=np.int64)] * m), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def interpolate(points, values, d: int, q: int) -> MultiPoly:
    """The unique polynomial of degree ``<= d`` through the given samples.

    Raises :class:`NoFitError` if no such polynomial exists and
    :class:`InsufficientDataError` if it is not unique.
    """
    points = np.asarray(points, dtype=np.int64)
    values = np.asarray(values, dtype=np.int64).reshape(-1) % q
    if points.ndim != 2 or points.shape[0] != values.size:
        raise UsageError("points must be (P, m) with one value per point")
    m = points.shape[1]
    if d + 1 > q:
        raise UsageError(f"interpolation needs d + 1 <= q (d={d}, q={q})")
    V = monomial_values(points, m, d, q)
    M = V.shape[1]
    aug = np.concatenate([V, values[:, None]], axis=1)
    R, piv, k = rref(aug, q, ncols=M)
    if (R[k:, M] != 0).any():
        raise NoFitError(f"values are not explained by any degree-{d} polynomial")
    if k < M:
        raise InsufficientDataError(f"{k} independent constraints for {M} unknowns")
    c = np.zeros(M, dtype=np.int64)
    c[piv] = R[:k, M]
    return MultiPoly(q, m, d, tuple(c.tolist()))


def interpolate_cube(values, d: int, q: int) -> MultiPoly:
    """Fit a 3-variate degree-``<= d`` polynomial to ``{point: value}`` samples."""
    if isinstance(values, dict):
        pts = np.array([[int(c) for c in p] for p in values], dtype=np.int64).reshape(-1, 3)
        vals = np.array([int(v) for v in values.values()], dtype=np.int64)
    else:
        pts, vals = values
    if np.asarray(pts).shape[-1] != 3:
        raise UsageError("interpolate_cube expects points of GF(q)^3")
    return interpolate(pts, vals, d, q)


def fraction_agreement(p: MultiPoly, r: MultiPoly, cap: int = DEFAULT_EXHAUSTIVE_CAP,
                       trials: int = 100_000, rng: np.random.Generator | None = None,
                       chunk: int = 1 << 16) -> Fraction:
    """Fraction of points of GF(q)^m where ``p`` and ``r`` agree.

    Exact when ``q**m <= cap``; otherwise a Monte Carlo estimate from
    ``trials`` uniform points.
    """
    p._check_compatible(r)
    diff = p - r
    q, m = p.q, p.nvars
    total = q**m
    if total <= cap:
        zeros = 0
        for start in range(0, total, chunk):
            idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
            pts = np.stack([(idx // q**(m - 1 - i)) % q for i in range(m)], axis=1) if m else idx[:, None]
            zeros += int((diff.evaluate_batch(pts) == 0).sum())
        return Fraction(zeros, total)
    if rng is None:
        raise UsageError("Monte Carlo mode needs an rng")
    hits = 0
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        pts = rng.integers(0, q, size=(b, m), dtype=np.int64)
        hits += int((diff.evaluate_batch(pts) == 0).sum())
        done += b
    return Fraction(hits, trials)
