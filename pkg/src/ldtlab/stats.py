from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_CONFIDENCE = 0.99


def hoeffding_half_width(trials: int, confidence: float = DEFAULT_CONFIDENCE) -> float:
    """Two-sided Hoeffding half-width for a mean of ``trials`` Bernoulli draws."""
    if trials <= 0:
        return 1.0
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * trials))


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo probability estimate with a Hoeffding confidence interval."""

    successes: int
    trials: int
    confidence: float = DEFAULT_CONFIDENCE

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("an estimate needs at least one trial")
        if not 0 <= self.successes <= self.trials:
            raise ValueError(f"successes={self.successes} outside [0, {self.trials}]")

    @property
    def p_hat(self) -> float:
        return self.successes / self.trials

    @property
    def half_width(self) -> float:
        return hoeffding_half_width(self.trials, self.confidence)

    @property
    def lower(self) -> float:
        return max(0.0, self.p_hat - self.half_width)

    @property
    def upper(self) -> float:
        return min(1.0, self.p_hat + self.half_width)

    def __add__(self, other: "Estimate") -> "Estimate":
        return Estimate(self.successes + other.successes, self.trials + other.trials, self.confidence)

    def as_dict(self) -> dict:
        return {"p_hat": self.p_hat, "half_width": self.half_width,
                "successes": self.successes, "trials": self.trials}

    def __repr__(self):
        return f"Estimate({self.p_hat:.6f} ± {self.half_width:.6f}, {self.successes}/{self.trials})"


DEFAULT_CHUNK = 8192


def chunked_count(trial_fn, trials: int, chunk: int = DEFAULT_CHUNK, threads: int = 1) -> int:
    """Sum ``trial_fn(chunk_index, size)`` over fixed-size chunks of ``trials``.

    Chunk boundaries depend only on ``trials`` and ``chunk``, so as long as
    ``trial_fn`` derives its randomness from the chunk index the total is
    independent of ``threads``.
    """
    sizes = [min(chunk, trials - s) for s in range(0, trials, chunk)]
    if threads <= 1 or len(sizes) <= 1:
        return sum(trial_fn(i, s) for i, s in enumerate(sizes))
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return sum(pool.map(trial_fn, range(len(sizes)), sizes))
