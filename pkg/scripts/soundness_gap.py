"""Planted-hyperplane tables: test pass rate against the best global agreement."""
import itertools
from dataclasses import dataclass, field

import numpy as np

from ldtlab import DecoderParams, PlantedSpec, estimate_pass, planted_table, table_agreement
from ldtlab.decoder import decode_report
from ldtlab.tester import TestSpec, sub_seed

from _common import parse_config, write_rows


@dataclass
class Config:
    """Soundness-gap sweep over q and the hyperplane density c."""
    qs: list = field(default_factory=lambda: [7, 11])
    cs: list = field(default_factory=lambda: [0.1, 0.25])
    n: int = 5
    d: int = 1
    k: int = 2
    trials: int = 200_000
    decode_seeds: int = 6
    seed: int = 0
    threads: int = 1
    out: str = "results/soundness_gap.csv"


def main(cfg: Config):
    rows = []
    for q, c in itertools.product(cfg.qs, cfg.cs):
        spec = PlantedSpec.random(q, cfg.n, cfg.d, c, seed=sub_seed(cfg.seed, q, int(c * 1000)))
        T = planted_table(spec, seed=cfg.seed, k=cfg.k)
        passing = estimate_pass(T, TestSpec(cfg.k, cfg.k - 1, cfg.trials, cfg.seed), cfg.threads)
        rep = decode_report(T, DecoderParams(seed=cfg.seed, seeds=cfg.decode_seeds,
                                             agreement_trials=cfg.trials, threads=cfg.threads))
        best = max((x.agreement.p_hat for x in rep.candidates), default=0.0)
        W = spec.hyperplanes[0]
        ext = spec.hidden_polys[0].compose_affine(np.zeros(cfg.n - 1, dtype=np.int64),
                                                  np.eye(cfg.n, dtype=np.int64)[:, list(W.pivots)])
        natural = table_agreement(T, ext, cfg.trials, seed=cfg.seed, threads=cfg.threads)
        rows.append(dict(q=q, c=c, hyperplanes=spec.h, pass_rate=passing.p_hat,
                         pass_half_width=passing.half_width, candidates=len(rep.candidates),
                         best_candidate_agreement=best, extension_agreement=natural.p_hat,
                         q_inverse=1 / q))
        print(f"q={q} c={c}: pass={passing.p_hat:.4f} candidates={len(rep.candidates)} "
              f"extension agreement={natural.p_hat:.5f}")
    write_rows(cfg.out, rows, cfg)


if __name__ == "__main__":
    main(parse_config(Config))
