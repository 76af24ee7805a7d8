"""Brute-force Grassmann spectra next to both closed forms, and inclusion-graph singular values."""
import warnings
from dataclasses import dataclass, field

from ldtlab.spectra import (APPROX_SECOND_SINGULAR, GrassmannSpec, brute_spectrum, grassmann_eigenvalue,
                            inclusion_graph, printed_eigenvalue)

from _common import parse_config, write_rows


@dataclass
class Config:
    """Spectra of small Grassmann and inclusion graphs."""
    grassmann: list = field(default_factory=lambda: ["2,4,1", "2,4,2", "3,4,2", "2,5,2", "3,5,2", "2,6,3"])
    inclusion: list = field(default_factory=lambda: ["G6,2", "G6,3", "G6,5", "G6,7", "G3,2", "G5,2"])
    m: int = 6
    out: str = "results/spectra.csv"


def main(cfg: Config):
    rows = []
    for item in cfg.grassmann:
        q, n, k = map(int, item.split(","))
        rep = brute_spectrum(GrassmannSpec(q, n, k))
        for r in range(min(k, n - k) + 1):
            exact = float(grassmann_eigenvalue(q, n, k, r))
            near = min(rep.eigenvalues, key=lambda vm: abs(vm[0] - exact))
            rows.append(dict(graph=f"G({k},{k - 1}) q={q} n={n}", index=r, brute=near[0],
                             multiplicity=near[1], scheme_formula=exact,
                             stated_formula=float(printed_eigenvalue(q, n, k, r))))
    for item in cfg.inclusion:
        gid, q = item.split(",")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m = cfg.m if gid != "G5" else 4
            G = inclusion_graph(gid, int(q), m=m, cap=10**5)
        rows.append(dict(graph=f"{gid} q={q} m={G.m}", index=1, brute=G.second_singular,
                         multiplicity="", scheme_formula="",
                         stated_formula=APPROX_SECOND_SINGULAR[gid](int(q))))
    for r in rows:
        print(r)
    write_rows(cfg.out, rows, cfg)


if __name__ == "__main__":
    main(parse_config(Config))
