"""Pass rates of honest tables across field sizes, dimensions, and test shapes."""
import itertools
from dataclasses import dataclass, field

from ldtlab import estimate_pass, honest_table, make_rng, random_poly
from ldtlab.tester import TestSpec, sub_seed

from _common import parse_config, write_rows


@dataclass
class Config:
    """Honest-table completeness sweep."""
    qs: list = field(default_factory=lambda: [5, 11])
    ns: list = field(default_factory=lambda: [4, 5])
    ds: list = field(default_factory=lambda: [1, 2])
    tests: list = field(default_factory=lambda: ["3,2", "3,1", "3,0", "2,1"])
    trials: int = 100_000
    seed: int = 0
    threads: int = 1
    out: str = "results/completeness.csv"


def main(cfg: Config):
    rows = []
    for q, n, d in itertools.product(cfg.qs, cfg.ns, cfg.ds):
        g = random_poly(n, d, q, make_rng(sub_seed(cfg.seed, q, n, d), 0))
        for test in cfg.tests:
            k, ell = map(int, test.split(","))
            est = estimate_pass(honest_table(g, k=k), TestSpec(k, ell, cfg.trials, cfg.seed), cfg.threads)
            rows.append(dict(q=q, n=n, d=d, k=k, ell=ell, **est.as_dict()))
            print(f"q={q} n={n} d={d} ({k},{ell}): {est}")
    write_rows(cfg.out, rows, cfg)


if __name__ == "__main__":
    main(parse_config(Config))
