"""Decoder recovery rate and agreement accuracy as the corruption rate grows."""
from dataclasses import dataclass, field

from ldtlab import DecoderParams, corrupted_table, decode, make_rng, random_poly
from ldtlab.tester import sub_seed

from _common import parse_config, write_rows


@dataclass
class Config:
    """Repeated decoding of corrupted tables."""
    rhos: list = field(default_factory=lambda: [0.1, 0.3, 0.5])
    runs: int = 10
    q: int = 11
    n: int = 4
    d: int = 2
    decode_seeds: int = 6
    seed: int = 0
    threads: int = 1
    out: str = "results/decoder_recovery.csv"


def main(cfg: Config):
    rows = []
    for rho in cfg.rhos:
        for i in range(cfg.runs):
            s = sub_seed(cfg.seed, int(rho * 1000), i)
            g = random_poly(cfg.n, cfg.d, cfg.q, make_rng(s, 0))
            T = corrupted_table(g, rho, seed=s)
            cands = decode(T, DecoderParams(seed=s, seeds=cfg.decode_seeds, threads=cfg.threads))
            top = cands[0] if cands else None
            rows.append(dict(rho=rho, run=i, candidates=len(cands),
                             recovered=top is not None and top.g == g,
                             agreement=None if top is None else top.agreement.p_hat))
            print(rows[-1])
    write_rows(cfg.out, rows, cfg)


if __name__ == "__main__":
    main(parse_config(Config))
