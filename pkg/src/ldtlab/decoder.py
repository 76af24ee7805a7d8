"""List decoding of a cubes table into global low-degree polynomials.

Pipeline per seed pair (x, sigma):

1. judge whether (x, sigma) is excellent (:func:`assess_excellence`);
2. build the plurality function f_{x,sigma} (:class:`PluralityFn`);
3. fit a global degree-d polynomial to it by RANSAC interpolation
   (:func:`fit_global`);
4. report the table agreement of each distinct fit and the share of
   C_{x,sigma} it explains.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Optional

import numpy as np

from . import prf
from .errors import (InsufficientDataError, NoFitError, RareEventError, ResourceCapError,
                     UsageError)
from .geometry import FlatBatch, complete_batch, gaussian_binomial
from .gf import FieldElement, FieldParams, make_rng
from .linalg import solve_batch
from .poly import MultiPoly, all_points, evaluate_coeffs, monomial_values, num_monomials
from .stats import Estimate
from .tables import CubesTable, table_agreement
from .tester import (DEFAULT_REJECTION_CAP, TestSpec, _point_values, agree_on, estimate_pass,
                     lattice_points, rejection_fill, sample_through, sub_seed, value_filter)


@dataclass(frozen=True)
class DecoderParams:
    """Knobs of the decoding pipeline; ``None`` fields are derived from the table."""

    epsilon_hat: Optional[float] = None
    gamma: Optional[float] = None
    measure_threshold: Optional[float] = None
    trials: int = 200
    seeds: int = 6
    plurality_budget: int = 200
    cap: int = DEFAULT_REJECTION_CAP
    ransac_rounds: int = 50
    verify_points: int = 400
    theta: Optional[float] = None
    agreement_trials: int = 5000
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        for name in ("trials", "seeds", "plurality_budget", "cap", "ransac_rounds",
                     "verify_points", "agreement_trials"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be >= 1")
        if self.gamma is not None and not 0 < self.gamma < 1:
            raise UsageError("gamma must lie in (0, 1)")
        for name in ("epsilon_hat", "measure_threshold", "theta"):
            v = getattr(self, name)
            if v is not None and not 0 < v <= 1:
                raise UsageError(f"{name} must lie in (0, 1]")

    def gamma_for(self, d: int) -> float:
        return self.gamma if self.gamma is not None else 1.0 / (1000 * max(d, 1) ** 3)

    def theta_for(self, d: int) -> float:
        return self.theta if self.theta is not None else min(1.0, 8 * max(d, 1) * self.gamma_for(d))

    def threshold_for(self, epsilon: float) -> float:
        return self.measure_threshold if self.measure_threshold is not None else epsilon / 5

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# excellence

@dataclass
class ExcellenceReport:
    x: tuple
    sigma: FieldElement
    mu_x_hat: Estimate
    line_disagreement_hat: Estimate
    p_x_sigma_hat: Estimate
    threshold: float
    gamma: float
    excellent: bool

    def as_dict(self) -> dict:
        return {"x": list(self.x), "sigma": int(self.sigma), "excellent": self.excellent,
                "threshold": self.threshold, "gamma": self.gamma,
                "mu_x": self.mu_x_hat.as_dict(),
                "line_disagreement": self.line_disagreement_hat.as_dict(),
                "p_x_sigma": self.p_x_sigma_hat.as_dict()}


def _zeros(B: int, n: int) -> np.ndarray:
    return np.zeros((B, 0, n), dtype=np.int64)


def assess_excellence(table: CubesTable, x, sigma, params: DecoderParams,
                      rng: Optional[np.random.Generator] = None,
                      epsilon: Optional[float] = None) -> ExcellenceReport:
    """Monte Carlo check of both excellence conditions for ``(x, sigma)``.

    The measure condition passes when the upper confidence limit reaches the
    threshold and the line condition when the lower limit is at most gamma,
    so borderline pairs are kept rather than dropped on noise.
    """
    q, n, k, d = table.q, table.n, table.k, table.d
    if n < 3 or k < 2:
        raise UsageError("excellence needs n >= 3 and flats of dimension >= 2")
    rng = rng if rng is not None else make_rng(params.seed, 0)
    x = np.asarray(x, dtype=np.int64) % q
    s = int(sigma) % q
    T = params.trials
    xs = np.broadcast_to(x, (T, n)).copy()

    # mu_x(C_{x,sigma}): uniform flat through x
    C = complete_batch(rng, q, xs, _zeros(T, n), k)
    mu = Estimate(int((_point_values(table, C, xs) == s).sum()), T)

    # C1 uniform in C_{x,sigma}, line through x inside C1, C2 in C_{x,sigma} containing it
    C1 = sample_through(table, x, s, T, rng, params.cap)
    line = complete_batch(rng, q, xs, _zeros(T, n), 1, ambient=C1.basis)
    C2 = rejection_fill(table, xs, line.basis, k, value_filter(table, x, s), rng, params.cap)
    disagree = Estimate(int((~agree_on(table, C1, C2, line)).sum()), T)

    # p_{x,sigma}: C2 ⊇ line unconditioned; agree at x but not on the line
    C3 = complete_batch(rng, q, xs, line.basis, k)
    p = (_point_values(table, C3, xs) == s) & ~agree_on(table, C1, C3, line)
    p_est = Estimate(int(p.sum()), T)

    eps = epsilon if epsilon is not None else (params.epsilon_hat or 1.0)
    thr = params.threshold_for(eps)
    gamma = params.gamma_for(d)
    ok = mu.upper >= thr and disagree.lower <= gamma
    return ExcellenceReport(tuple(int(v) for v in x), FieldParams(q)(s), mu, disagree, p_est,
                            thr, gamma, bool(ok))


# ---------------------------------------------------------------------------
# plurality function

class PluralityFn:
    """``y -> most common T(C)(y)`` over sampled ``C in C_{x,sigma}`` through ``y``.

    Each point draws its cubes from its own PRF-derived stream, so a value
    does not depend on which other points were queried or in what order.
    Ties go to the smallest field value.  Points for which no qualifying cube
    turns up get value 0 and are recorded in ``unfilled``; the search gives up
    after ``cap`` draws or after 64 draws per flat through the line xy,
    whichever is first, since in small spaces the set can be empty.  A point
    with some but fewer than ``budget`` accepted cubes at the cap uses those.
    """

    def __init__(self, table: CubesTable, x, sigma, budget: int = 200,
                 cap: int = DEFAULT_REJECTION_CAP, seed: int = 0):
        self.table = table
        self.q, self.n = table.q, table.n
        self.x = np.asarray(x, dtype=np.int64) % self.q
        self.sigma = int(sigma) % self.q
        self.budget = budget
        self.cap = cap
        self.seed = seed
        self.memo: dict = {}
        self.unfilled: set = set()
        self._empty_after = min(cap, 64 * gaussian_binomial(self.n - 1, table.k - 1, self.q))

    def _rng(self, y: tuple) -> np.random.Generator:
        words = np.array([[*self.x.tolist(), self.sigma, *y]], dtype=np.uint64)
        return prf.rng_from_key(prf.hash_words(self.seed, words)[0])

    def _compute_many(self, ys: list) -> None:
        """Fill the memo for ``ys`` in one batched rejection loop.

        Every point consumes fixed-size blocks of candidates from its own
        stream and keeps the first ``budget`` accepted ones, so the outcome
        per point does not depend on the batch it was computed in.
        """
        t, q, n, k, B = self.table, self.q, self.n, self.table.k, self.budget
        xt = tuple(self.x.tolist())
        todo = [y for y in ys if y != xt]
        if xt in ys:
            self.memo[xt] = self.sigma
        if not todo:
            return
        block = 2 * B
        rngs = [self._rng(y) for y in todo]
        Y = np.array(todo, dtype=np.int64)
        dir0 = (Y - self.x) % q
        got = [[] for _ in todo]
        draws = np.zeros(len(todo), dtype=np.int64)
        pending = np.arange(len(todo))
        while len(pending):
            new = np.stack([rngs[i].integers(0, q, size=(block, k - 1, n), dtype=np.int64)
                            for i in pending])
            P = len(pending)
            dirs = np.concatenate([np.broadcast_to(dir0[pending, None, None, :], (P, block, 1, n)),
                                   new], axis=2).reshape(P * block, k, n)
            flats, rank = FlatBatch.from_spans(q, np.broadcast_to(self.x, (P * block, n)), dirs)
            xs = np.broadcast_to(self.x, (P * block, n))
            ys_rep = np.repeat(Y[pending], block, axis=0)
            both = t.values(flats, np.stack([xs, ys_rep], axis=1))
            ok = ((rank == k) & (both[:, 0] == self.sigma)).reshape(P, block)
            yv = both[:, 1].reshape(P, block)
            draws[pending] += block
            still = []
            for j, i in enumerate(pending):
                got[i].extend(yv[j, ok[j]][: B - len(got[i])].tolist())
                if len(got[i]) < B:
                    if not got[i] and draws[i] >= self._empty_after:
                        self.unfilled.add(todo[i])
                    elif draws[i] < self.cap:
                        still.append(i)
                    elif not got[i]:
                        self.unfilled.add(todo[i])
            pending = np.array(still, dtype=np.int64)
        for i, y in enumerate(todo):
            if y in self.unfilled:
                self.memo[y] = 0
            else:
                self.memo[y] = int(np.bincount(got[i], minlength=q).argmax())

    def value(self, y) -> int:
        key = tuple(int(v) % self.q for v in np.asarray(y).ravel())
        if key not in self.memo:
            self._compute_many([key])
        return self.memo[key]

    def values(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.n) % self.q
        keys = [tuple(p) for p in pts.tolist()]
        missing = list(dict.fromkeys(k for k in keys if k not in self.memo))
        if missing:
            self._compute_many(missing)
        return np.array([self.memo[k] for k in keys], dtype=np.int64)

    __call__ = values


def plurality_value(f: PluralityFn, table: CubesTable, y) -> FieldElement:
    if f.table is not table:
        raise UsageError("plurality function was built for a different table")
    return FieldParams(table.q)(f.value(y))


# ---------------------------------------------------------------------------
# point-evaluable functions

def _batch_fn(f) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(f, MultiPoly):
        return f.evaluate_batch
    if isinstance(f, PluralityFn):
        return f.values
    if callable(f):
        return lambda pts: np.asarray(f(pts), dtype=np.int64)
    raise UsageError("expected a MultiPoly, PluralityFn or callable on point arrays")


def _field_shape(f, q, n):
    q = q if q is not None else getattr(f, "q", None)
    n = n if n is not None else getattr(f, "n", getattr(f, "nvars", None))
    if q is None or n is None:
        raise UsageError("q and n must be given for a plain callable")
    return int(q), int(n)


def rs_neighborhood_test(f, d: int, trials: int, rng: np.random.Generator,
                         q: Optional[int] = None, n: Optional[int] = None) -> Estimate:
    """Failure rate of the collinear-points degree test.

    Each trial takes uniform ``y != h`` and checks that the values of ``f`` at
    ``y + i (h - y)``, ``i = 0..d+1``, fit a univariate polynomial of degree
    at most ``d``; that is, that their ``(d+1)``-th finite difference vanishes.
    """
    q, n = _field_shape(f, q, n)
    if d + 2 > q:
        raise UsageError(f"need d + 2 <= q, got d={d}, q={q}")
    if trials < 1:
        raise UsageError("trials must be >= 1")
    fn = _batch_fn(f)
    y = rng.integers(0, q, size=(trials, n), dtype=np.int64)
    h = rng.integers(0, q, size=(trials, n), dtype=np.int64)
    same = (y == h).all(axis=1)
    while same.any():
        h[same] = rng.integers(0, q, size=(int(same.sum()), n), dtype=np.int64)
        same = (y == h).all(axis=1)
    i = np.arange(d + 2)
    pts = (y[:, None, :] + i[None, :, None] * (h - y)[:, None, :]) % q
    vals = fn(pts.reshape(-1, n)).reshape(trials, d + 2) % q
    w = np.array([(-1) ** j * comb(d + 1, j) for j in range(d + 2)], dtype=np.int64) % q
    fail = (vals @ w) % q != 0
    return Estimate(int(fail.sum()), trials)


def rs_failure_exact(f, d: int, q: Optional[int] = None, n: Optional[int] = None,
                     cap: int = 10**7) -> Fraction:
    """Exact failure rate of :func:`rs_neighborhood_test` over all pairs ``y != h``."""
    q, n = _field_shape(f, q, n)
    if d + 2 > q:
        raise UsageError(f"need d + 2 <= q, got d={d}, q={q}")
    pairs = q**n * (q**n - 1)
    if pairs > cap:
        raise ResourceCapError(f"{pairs} pairs exceed cap {cap}", pairs, cap)
    fn = _batch_fn(f)
    pts = all_points(n, q)
    vals = fn(pts) % q
    weights = q ** np.arange(n - 1, -1, -1)
    w = np.array([(-1) ** j * comb(d + 1, j) for j in range(d + 2)], dtype=np.int64) % q
    fails = 0
    for y in pts:
        h = pts[(pts != y).any(axis=1)]
        line = (y[None, None, :] + np.arange(d + 2)[None, :, None] * (h - y)[:, None, :]) % q
        fails += int(((vals[line @ weights] @ w) % q != 0).sum())
    return Fraction(fails, pairs)


# ---------------------------------------------------------------------------
# global fit

def fit_global(f, n: int, d: int, params: DecoderParams, rng: Optional[np.random.Generator] = None,
               q: Optional[int] = None) -> MultiPoly:
    """RANSAC recovery of a degree-d polynomial close to ``f``.

    Each round interpolates through ``C(n+d, d)`` random points (redrawing
    singular systems) and scores the fit on a verification sample drawn once,
    independently of all interpolation points.  Returns the best fit when its
    score reaches ``1 - theta``; stops early on a perfect score.
    """
    q, n = _field_shape(f, q, n)
    if d + 1 > q:
        raise UsageError(f"need d + 1 <= q, got d={d}, q={q}")
    rng = rng if rng is not None else make_rng(params.seed, 1)
    fn = _batch_fn(f)
    M = num_monomials(n, d)
    if q**n < M:
        raise InsufficientDataError(f"GF({q})^{n} has fewer than {M} points")
    theta = params.theta_for(d)
    V = rng.integers(0, q, size=(params.verify_points, n), dtype=np.int64)
    fv = fn(V) % q
    best, best_score = None, -1.0
    for _ in range(params.ransac_rounds):
        for _attempt in range(1000):
            P = rng.integers(0, q, size=(M, n), dtype=np.int64)
            A = monomial_values(P, n, d, q)
            coeffs, ok = solve_batch(A[None], np.zeros((1, M), dtype=np.int64), q)
            if ok[0]:
                break
        else:
            raise InsufficientDataError("could not draw a nonsingular interpolation system")
        coeffs, _ = solve_batch(A[None], (fn(P) % q)[None], q)
        c = coeffs[0]
        score = float((evaluate_coeffs(c, V, n, d, q) == fv).mean())
        if score > best_score:
            best, best_score = c, score
            if score == 1.0:
                break
    if best_score < 1.0 - theta:
        raise NoFitError(f"best RANSAC score {best_score:.4f} below {1.0 - theta:.4f}", best_score)
    return MultiPoly(q, n, d, tuple(int(v) for v in best))


# ---------------------------------------------------------------------------
# decoding

@dataclass
class DecodedCandidate:
    g: MultiPoly
    agreement: Estimate
    provenance: tuple
    F_measure: Estimate

    def as_dict(self) -> dict:
        x, sigma = self.provenance
        return {"polynomial": self.g.to_record(), "agreement": self.agreement.as_dict(),
                "provenance": {"x": list(x), "sigma": int(sigma)},
                "F_measure": self.F_measure.as_dict()}


@dataclass
class SeedOutcome:
    x: tuple
    sigma: int
    excellence: Optional[ExcellenceReport] = None
    status: str = ""
    fit: Optional[MultiPoly] = None
    unfilled: int = 0

    def as_dict(self) -> dict:
        return {"x": list(self.x), "sigma": self.sigma, "status": self.status,
                "unfilled_points": self.unfilled,
                "excellence": None if self.excellence is None else self.excellence.as_dict(),
                "fit": None if self.fit is None else self.fit.to_record()}


@dataclass
class DecodeReport:
    epsilon_hat: Estimate
    candidates: list
    seeds: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"epsilon_hat": self.epsilon_hat.as_dict(),
                "candidates": [c.as_dict() for c in self.candidates],
                "seeds": [s.as_dict() for s in self.seeds]}


def _entry_matches(table: CubesTable, g: MultiPoly, flats) -> np.ndarray:
    pts = lattice_points(flats, table.d)
    return (table.values(flats, pts) == g.evaluate_batch(pts)).all(axis=1)


def _run_seed(table: CubesTable, params: DecoderParams, i: int, epsilon: float) -> SeedOutcome:
    q, n, k = table.q, table.n, table.k
    rng = make_rng(sub_seed(params.seed, 1), i)
    x = rng.integers(0, q, size=(1, n), dtype=np.int64)
    C = complete_batch(rng, q, x, _zeros(1, n), k)
    sigma = int(_point_values(table, C, x)[0])
    out = SeedOutcome(tuple(int(v) for v in x[0]), sigma)
    try:
        out.excellence = assess_excellence(table, x[0], sigma, params, rng, epsilon)
    except RareEventError:
        out.status = "rare-event"
        return out
    if not out.excellence.excellent:
        out.status = "not-excellent"
        return out
    f = PluralityFn(table, x[0], sigma, params.plurality_budget, params.cap,
                    sub_seed(params.seed, 2, i))
    try:
        out.fit = fit_global(f, n, table.d, params, make_rng(sub_seed(params.seed, 3), i))
        out.status = "fit"
    except NoFitError as e:
        out.status = f"no-fit ({e.best_score:.4f})"
    out.unfilled = len(f.unfilled)
    return out


def decode_report(table: CubesTable, params: DecoderParams = DecoderParams()) -> DecodeReport:
    """Full decoding run with per-seed diagnostics."""
    k = table.k
    if k < 2 or table.n < 3:
        raise UsageError("decoding needs n >= 3 and flats of dimension >= 2")
    if params.epsilon_hat is not None:
        trials = params.agreement_trials
        eps_est = Estimate(round(params.epsilon_hat * trials), trials)
    else:
        eps_est = estimate_pass(table, TestSpec(k, k - 1, params.agreement_trials,
                                                sub_seed(params.seed, 0)))
    epsilon = params.epsilon_hat if params.epsilon_hat is not None else eps_est.p_hat
    epsilon = max(epsilon, 1.0 / params.agreement_trials)

    def run(i):
        return _run_seed(table, params, i, epsilon)

    if params.threads > 1:
        with ThreadPoolExecutor(max_workers=params.threads) as pool:
            outcomes = list(pool.map(run, range(params.seeds)))
    else:
        outcomes = [run(i) for i in range(params.seeds)]

    seen: dict = {}
    for o in outcomes:
        if o.fit is not None and o.fit not in seen:
            seen[o.fit] = o
    candidates = []
    for j, (g, o) in enumerate(seen.items()):
        agreement = table_agreement(table, g, params.agreement_trials, sub_seed(params.seed, 4),
                                    params.threads)
        rng = make_rng(sub_seed(params.seed, 5), j)
        C = sample_through(table, o.x, o.sigma, params.trials, rng, params.cap)
        F = Estimate(int(_entry_matches(table, g, C).sum()), params.trials)
        candidates.append(DecodedCandidate(g, agreement, (o.x, FieldParams(table.q)(o.sigma)), F))
    candidates.sort(key=lambda c: -c.agreement.p_hat)
    return DecodeReport(eps_est, candidates, outcomes)


def decode(table: CubesTable, params: DecoderParams = DecoderParams()) -> list:
    """Distinct global polynomials recovered from ``table``, best agreement first."""
    return decode_report(table, params).candidates


# ---------------------------------------------------------------------------
# equality

@dataclass
class EqualityCheck:
    equal: bool
    witness: Optional[tuple]
    probes: int
    two_point_agree: bool

    def __bool__(self):
        return self.equal


def candidate_equality_check(g1: MultiPoly, g2: MultiPoly, x=None, y=None,
                             rng: Optional[np.random.Generator] = None,
                             max_probes: int = 10_000) -> EqualityCheck:
    """Exact comparison, a differing point when unequal, and the two-point probe at ``x, y``."""
    if (g1.q, g1.nvars) != (g2.q, g2.nvars):
        raise UsageError("polynomials live on different spaces")
    q, n = g1.q, g1.nvars
    rng = rng if rng is not None else make_rng(0, 0)
    x = rng.integers(0, q, size=n) if x is None else np.asarray(x, dtype=np.int64)
    y = rng.integers(0, q, size=n) if y is None else np.asarray(y, dtype=np.int64)
    pair = np.stack([x, y]) % q
    two = bool((g1.evaluate_batch(pair) == g2.evaluate_batch(pair)).all())
    if g1 == g2:
        return EqualityCheck(True, None, 0, two)
    probes = 0
    while probes < max_probes:
        pts = rng.integers(0, q, size=(16, n), dtype=np.int64)
        diff = np.nonzero(g1.evaluate_batch(pts) != g2.evaluate_batch(pts))[0]
        if len(diff):
            probes += int(diff[0]) + 1
            return EqualityCheck(False, tuple(int(v) for v in pts[diff[0]]), probes, two)
        probes += 16
    raise RareEventError("no witness found; degree must be >= q", probes)
