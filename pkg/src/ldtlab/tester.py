"""Monte Carlo estimation of agreement-test pass probabilities.

A (k, ell) trial samples a uniform ell-flat U and two independent uniform
k-flats V1, V2 containing it, and accepts iff T(V1)|_U and T(V2)|_U are the
same polynomial.  Because every table entry has degree d < q, identity on U
is decided exactly by comparing values on U's unisolvent lattice (see
:func:`ldtlab.poly.simplex_lattice`); :func:`trial_symbolic` is the slow
reference that restricts and compares coefficients instead.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import prf
from .errors import RareEventError, UsageError
from .geometry import AffineFlat, FlatBatch, complete_batch, sample_edge_batch
from .gf import make_rng
from .poly import MultiPoly, simplex_lattice
from .stats import DEFAULT_CHUNK, Estimate, chunked_count
from .tables import CubesTable

DEFAULT_REJECTION_CAP = 10**6
DEFAULT_FUDGE = 0.5


@dataclass(frozen=True)
class TestSpec:
    k: int
    ell: int
    trials: int
    seed: int = 0

    __test__ = False  # not a pytest class

    def validate(self, n: int):
        if not 0 <= self.ell < self.k <= n:
            raise UsageError(f"need 0 <= ell < k <= n, got ell={self.ell}, k={self.k}, n={n}")
        if self.trials < 1:
            raise UsageError("trials must be >= 1")


def sub_seed(seed: int, *labels: int) -> int:
    """Deterministic child seed for a labelled sub-experiment."""
    key = prf.hash_words(seed, np.array([labels], dtype=np.uint64))
    return int(key[0, 0]) & ((1 << 63) - 1)


def lattice_points(flats: FlatBatch, d: int) -> np.ndarray:
    lat = simplex_lattice(flats.k, d)
    return flats.embed(np.broadcast_to(lat, (len(flats),) + lat.shape))


def agree_on(table: CubesTable, A: FlatBatch, B: FlatBatch, shared: FlatBatch) -> np.ndarray:
    """Whether the entries of ``A`` and ``B`` restrict to the same polynomial on ``shared``."""
    pts = lattice_points(shared, table.d)
    return (table.values(A, pts) == table.values(B, pts)).all(axis=1)


def run_trials(table: CubesTable, k: int, ell: int, size: int, rng: np.random.Generator) -> np.ndarray:
    U, V1, V2 = sample_edge_batch(rng, table.q, table.n, k, ell, size)
    return agree_on(table, V1, V2, U)


def estimate_pass(table: CubesTable, spec: TestSpec, threads: int = 1,
                  chunk: int = DEFAULT_CHUNK) -> Estimate:
    """Pass probability of the (k, ell) agreement test on ``table``."""
    spec.validate(table.n)
    if table.k != spec.k:
        raise UsageError(f"table holds {table.k}-flats but the test uses k={spec.k}")

    def run(i, size):
        return int(run_trials(table, spec.k, spec.ell, size, make_rng(spec.seed, i)).sum())

    return Estimate(chunked_count(run, spec.trials, chunk, threads), spec.trials)


def restrict_entry(table: CubesTable, V: AffineFlat, U: AffineFlat) -> MultiPoly:
    """``T(V)|_U`` in U's canonical coordinates (symbolic)."""
    entry = table.query(V)
    return entry.compose_affine(V.coords(U.base_array), V.coords(U.basis_array))


def trial_symbolic(table: CubesTable, U: AffineFlat, V1: AffineFlat, V2: AffineFlat) -> bool:
    return restrict_entry(table, V1, U) == restrict_entry(table, V2, U)


# ---------------------------------------------------------------------------
# comparing test variants

@dataclass(frozen=True)
class VariantReport:
    k: int
    r: int
    r_prime: int
    q: int
    alpha_r: Estimate
    alpha_r_prime: Estimate
    fudge: float

    @property
    def exponent(self) -> int:
        return self.k - 2 * self.r_prime + self.r + 1

    @property
    def upper_slack(self) -> float:
        return (1 + self.fudge) * float(self.q) ** (-self.exponent)

    @property
    def ci_slack(self) -> float:
        return self.alpha_r.half_width + self.alpha_r_prime.half_width

    @property
    def lower_holds(self) -> bool:
        """``(1 - fudge) alpha_krk <= alpha_kr'k`` within CI slack."""
        return (1 - self.fudge) * self.alpha_r.p_hat <= self.alpha_r_prime.p_hat + self.ci_slack

    @property
    def upper_holds(self) -> bool:
        return self.alpha_r_prime.p_hat <= self.alpha_r.p_hat + self.upper_slack + self.ci_slack

    @property
    def holds(self) -> bool:
        return self.lower_holds and self.upper_holds

    @property
    def unscaled_lower_holds(self) -> bool:
        """The lower inequality with the ``1 - o(1)`` factor dropped entirely."""
        return self.alpha_r.p_hat <= self.alpha_r_prime.p_hat + self.ci_slack

    def as_dict(self) -> dict:
        return {"k": self.k, "r": self.r, "r_prime": self.r_prime, "q": self.q, "fudge": self.fudge,
                "alpha_r": self.alpha_r.as_dict(), "alpha_r_prime": self.alpha_r_prime.as_dict(),
                "exponent": self.exponent, "upper_slack": self.upper_slack, "ci_slack": self.ci_slack,
                "lower_holds": self.lower_holds, "upper_holds": self.upper_holds, "holds": self.holds,
                "unscaled_lower_holds": self.unscaled_lower_holds}


def slack_exponent(k: int, r: int, r_prime: int) -> int:
    return k - 2 * r_prime + r + 1


def compare_variants(table: CubesTable, r: int, r_prime: int, trials: int, seed: int = 0,
                     fudge: float = DEFAULT_FUDGE, threads: int = 1) -> VariantReport:
    """Estimate alpha_{k r k} and alpha_{k r' k} and check the two-sided relation
    between them, with each ``o(1)`` replaced by ``fudge``."""
    k = table.k
    if not 0 <= r < r_prime < k:
        raise UsageError(f"need 0 <= r < r' < k, got r={r}, r'={r_prime}, k={k}")
    if 2 * k > table.n:
        raise UsageError(f"the relation is stated for k <= n/2 (k={k}, n={table.n})")
    a = estimate_pass(table, TestSpec(k, r, trials, sub_seed(seed, r)), threads)
    b = estimate_pass(table, TestSpec(k, r_prime, trials, sub_seed(seed, r_prime)), threads)
    return VariantReport(k, r, r_prime, table.q, a, b, fudge)


# ---------------------------------------------------------------------------
# the (x, sigma, C1, y, tau, C2) distribution

@dataclass(frozen=True)
class DSample:
    x: tuple
    sigma: int
    C1: AffineFlat
    y: tuple
    tau: int
    C2: AffineFlat
    plane: AffineFlat
    passed: bool


@dataclass
class DSampleBatch:
    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray
    tau: np.ndarray
    C1: FlatBatch
    C2: FlatBatch
    plane: FlatBatch
    passed: np.ndarray

    def __len__(self):
        return len(self.passed)

    def sample(self, i: int) -> DSample:
        return DSample(tuple(int(v) for v in self.x[i]), int(self.sigma[i]), self.C1.flat(i),
                       tuple(int(v) for v in self.y[i]), int(self.tau[i]), self.C2.flat(i),
                       self.plane.flat(i), bool(self.passed[i]))


def _point_values(table: CubesTable, flats: FlatBatch, points: np.ndarray) -> np.ndarray:
    return table.values(flats, points[:, None, :])[:, 0]


def sample_D_batch(table: CubesTable, rng: np.random.Generator, size: int) -> DSampleBatch:
    """Draw ``size`` tuples by the direct route: uniform x, uniform C1 through x
    (so sigma = T(C1)(x) carries the measure weighting), uniform y in C1 minus
    x, uniform codimension-one flat P of C1 through x and y, uniform C2
    containing P, tau = T(C2)(y)."""
    q, n, k = table.q, table.n, table.k
    if k < 2 or n < k:
        raise UsageError("the distribution needs tables on flats of dimension >= 2")
    x = rng.integers(0, q, size=(size, n), dtype=np.int64)
    C1 = complete_batch(rng, q, x, np.zeros((size, 0, n), dtype=np.int64), k)
    t = rng.integers(0, q, size=(size, k), dtype=np.int64)
    while True:
        zero = ~t.any(axis=1)
        if not zero.any():
            break
        t[zero] = rng.integers(0, q, size=(int(zero.sum()), k), dtype=np.int64)
    y = (x + np.einsum("bk,bkn->bn", t, C1.basis)) % q
    P = complete_batch(rng, q, x, ((y - x) % q)[:, None, :], k - 1, ambient=C1.basis)
    C2 = complete_batch(rng, q, P.base, P.basis, k)
    sigma = _point_values(table, C1, x)
    tau = _point_values(table, C2, y)
    passed = agree_on(table, C1, C2, P)
    return DSampleBatch(x, y, sigma, tau, C1, C2, P, passed)


def sample_D(table: CubesTable, rng: np.random.Generator) -> DSample:
    return sample_D_batch(table, rng, 1).sample(0)


def estimate_pass_D(table: CubesTable, trials: int, seed: int = 0, threads: int = 1,
                    chunk: int = DEFAULT_CHUNK) -> Estimate:
    def run(i, size):
        return int(sample_D_batch(table, make_rng(seed, i), size).passed.sum())

    return Estimate(chunked_count(run, trials, chunk, threads), trials)


# ---------------------------------------------------------------------------
# conditioning on C_{x, sigma}

def rejection_fill(table: CubesTable, base: np.ndarray, fixed: np.ndarray, k: int, accept,
                   rng: np.random.Generator, cap: int = DEFAULT_REJECTION_CAP,
                   per_round: int = 4) -> FlatBatch:
    """One uniform k-flat per row through ``base[i]`` containing ``fixed[i]``,
    conditioned on ``accept(flats, rows)``.

    Raises :class:`RareEventError` once ``cap`` candidates have been drawn
    while rows are still unfilled.
    """
    base = np.asarray(base, dtype=np.int64)
    B, n = base.shape
    fixed = np.asarray(fixed, dtype=np.int64).reshape(B, -1, n)
    out_base = np.zeros((B, n), dtype=np.int64)
    out_basis = np.zeros((B, k, n), dtype=np.int64)
    out_piv = np.zeros((B, k), dtype=np.int64)
    todo = np.arange(B)
    draws = 0
    while len(todo):
        if draws >= cap:
            raise RareEventError(f"{len(todo)} of {B} conditioned draws unfilled", draws)
        rows = np.repeat(todo, per_round)
        cand = complete_batch(rng, table.q, base[rows], fixed[rows], k)
        draws += len(rows)
        ok = accept(cand, rows).reshape(len(todo), per_round)
        hit = ok.any(axis=1)
        first = ok.argmax(axis=1)
        sel = np.nonzero(hit)[0]
        src = sel * per_round + first[sel]
        dst = todo[sel]
        out_base[dst] = cand.base[src]
        out_basis[dst] = cand.basis[src]
        out_piv[dst] = cand.pivots[src]
        todo = todo[~hit]
        if draws > 64 * B:
            per_round = min(per_round * 2, 256)
    return FlatBatch(table.q, out_base, out_basis, out_piv)


def value_filter(table: CubesTable, x: np.ndarray, sigma: int):
    """Acceptance predicate ``T(C)(x) == sigma`` for :func:`rejection_fill`."""
    x = np.asarray(x, dtype=np.int64)

    def accept(flats, rows):
        pts = np.broadcast_to(x, (len(flats), table.n)) if x.ndim == 1 else x[rows]
        return _point_values(table, flats, pts) == sigma

    return accept


def sample_through(table: CubesTable, x, sigma: int, count: int, rng: np.random.Generator,
                   cap: int = DEFAULT_REJECTION_CAP) -> FlatBatch:
    """``count`` uniform flats from C_{x, sigma}."""
    x = np.asarray(x, dtype=np.int64) % table.q
    base = np.broadcast_to(x, (count, table.n))
    return rejection_fill(table, base, np.zeros((count, 0, table.n), dtype=np.int64), table.k,
                          value_filter(table, x, sigma), rng, cap)


def conditional_pass(table: CubesTable, x, sigma: int, trials: int, rng: np.random.Generator,
                     cap: int = DEFAULT_REJECTION_CAP) -> Estimate:
    """``Pr[C2 in C_{x,sigma} and the entries agree on P | C1 in C_{x,sigma}]``
    for a uniform codimension-one flat P of C1 through x and uniform C2 ⊇ P."""
    q, n, k = table.q, table.n, table.k
    if k < 1:
        raise UsageError("conditioning needs flats of dimension >= 1")
    x = np.asarray(x, dtype=np.int64) % q
    sigma = int(sigma) % q
    C1 = sample_through(table, x, sigma, trials, rng, cap)
    xs = np.broadcast_to(x, (trials, n)).copy()
    P = complete_batch(rng, q, xs, np.zeros((trials, 0, n), dtype=np.int64), k - 1, ambient=C1.basis)
    C2 = complete_batch(rng, q, P.base, P.basis, k)
    ok = agree_on(table, C1, C2, P) & (_point_values(table, C2, xs) == sigma)
    return Estimate(int(ok.sum()), trials)
