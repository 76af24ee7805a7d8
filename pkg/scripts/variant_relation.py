"""alpha_{k r k} against alpha_{k r' k} on corrupted tables, with their chance-agreement model."""
from dataclasses import dataclass, field

from ldtlab import compare_variants, corrupted_table, make_rng, random_poly
from ldtlab.tester import sub_seed

from _common import parse_config, write_rows


@dataclass
class Config:
    """Sweep of the corruption rate for one (r, r') pair."""
    rhos: list = field(default_factory=lambda: [0.0, 0.1, 0.25, 0.5, 0.75])
    q: int = 11
    n: int = 8
    k: int = 3
    d: int = 2
    r: int = 0
    r_prime: int = 1
    trials: int = 100_000
    seed: int = 0
    threads: int = 1
    out: str = "results/variant_relation.csv"


def chance_model(rho, q, d, dim):
    """Both entries honest, or at least one random and the two agree by chance on a dim-flat."""
    from math import comb
    both = (1 - rho) ** 2
    return both + (1 - both) * q ** (-comb(dim + d, d))


def main(cfg: Config):
    rows = []
    for rho in cfg.rhos:
        g = random_poly(cfg.n, cfg.d, cfg.q, make_rng(sub_seed(cfg.seed, int(rho * 1000)), 0))
        T = corrupted_table(g, rho, seed=cfg.seed, k=cfg.k)
        rep = compare_variants(T, cfg.r, cfg.r_prime, cfg.trials, cfg.seed, threads=cfg.threads)
        rows.append(dict(rho=rho, alpha_r=rep.alpha_r.p_hat, alpha_r_prime=rep.alpha_r_prime.p_hat,
                         model_r=chance_model(rho, cfg.q, cfg.d, cfg.r),
                         model_r_prime=chance_model(rho, cfg.q, cfg.d, cfg.r_prime),
                         ci_slack=rep.ci_slack, upper_slack=rep.upper_slack,
                         unscaled_lower_holds=rep.unscaled_lower_holds,
                         scaled_lower_holds=rep.lower_holds, upper_holds=rep.upper_holds))
        print(f"rho={rho}: {rows[-1]}")
    write_rows(cfg.out, rows, cfg)


if __name__ == "__main__":
    main(parse_config(Config))
