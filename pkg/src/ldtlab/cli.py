"""Seeded experiment runner.

Every subcommand writes ``results.csv`` (one row per estimate) and
``report.json`` (the full report) into ``--out``.  Settings come from
defaults, then an optional ``--config`` JSON file, then flags.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import sys
import time
import warnings
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from . import __version__
from .decoder import DecoderParams, decode_report, rs_neighborhood_test
from .errors import RareEventError, ResourceCapError, UsageError
from .gf import FieldParams, make_rng
from .poly import random_poly
from .spectra import APPROX_SECOND_SINGULAR, GrassmannSpec, brute_spectrum, inclusion_graph
from .stats import Estimate
from .tables import (PlantedSpec, corrupted_table, honest_table, planted_table,
                     table_from_descriptor)
from .tester import TestSpec, compare_variants, estimate_pass, sub_seed

KINDS = ("estimate", "compare-variants", "spectra", "planted-gap", "decode", "rs-test")
EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_CAP, EXIT_EMPTY = 0, 1, 2, 3, 4


@dataclass
class ExperimentConfig:
    kind: str = "estimate"
    q: int = 11
    n: int = 4
    d: int = 2
    k: int = 3
    ell: int = 2
    trials: int = 10_000
    seed: int = 0
    table_kind: str = "honest"
    rho: float = 0.0
    c: float = 0.25
    table: Optional[dict] = None
    r: int = 0
    r_prime: int = 1
    graph: Optional[str] = None
    m: int = 6
    affine: bool = False
    rs_degree: Optional[int] = None
    decode_seeds: int = 6
    out: str = "results"
    threads: int = 1

    # fields that change how a run executes but never what it computes
    EXECUTION_ONLY = ("out", "threads")

    def validate(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        FieldParams(self.q)
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        if self.threads < 1:
            raise UsageError("threads must be >= 1")
        if self.table is None and self.table_kind not in ("honest", "corrupted", "planted"):
            raise UsageError(f"unknown table kind {self.table_kind!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise UsageError("rho must lie in [0, 1]")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise UsageError(f"unknown config fields: {sorted(extra)}")
        return cls(**data)

    def experiment_id(self) -> str:
        core = {k: v for k, v in self.to_dict().items() if k not in self.EXECUTION_ONLY}
        blob = json.dumps(core, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class ResultRow:
    experiment_id: str
    kind: str
    label: str
    q: int
    n: int
    d: int
    k: int
    ell: int
    seed: int
    table_kind: str
    rho: float
    c: float
    r: int
    r_prime: int
    config_trials: int
    p_hat: float
    half_width: float
    successes: int
    trials: int
    wall_ms: float
    version: str

    VOLATILE = ("wall_ms",)

    @classmethod
    def columns(cls) -> list:
        return [f.name for f in fields(cls)]


def make_row(cfg: ExperimentConfig, label: str, est: Estimate, wall_ms: float) -> ResultRow:
    table_kind = cfg.table.get("kind", "custom") if cfg.table else cfg.table_kind
    return ResultRow(cfg.experiment_id(), cfg.kind, label, cfg.q, cfg.n, cfg.d, cfg.k, cfg.ell,
                     cfg.seed, table_kind, cfg.rho, cfg.c, cfg.r, cfg.r_prime, cfg.trials,
                     est.p_hat, est.half_width, est.successes, est.trials, round(wall_ms, 3),
                     __version__)


def build_table(cfg: ExperimentConfig):
    if cfg.table is not None:
        return table_from_descriptor(cfg.table)
    if cfg.table_kind == "planted":
        spec = PlantedSpec.random(cfg.q, cfg.n, cfg.d, cfg.c, seed=sub_seed(cfg.seed, 11))
        return planted_table(spec, seed=cfg.seed, k=cfg.k)
    g = random_poly(cfg.n, cfg.d, cfg.q, make_rng(sub_seed(cfg.seed, 10), 0))
    if cfg.table_kind == "corrupted":
        return corrupted_table(g, cfg.rho, seed=cfg.seed, k=cfg.k)
    return honest_table(g, k=cfg.k, seed=cfg.seed)


class _Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = 1000.0 * (time.perf_counter() - self.t0)


# ---------------------------------------------------------------------------
# experiments: each returns (rows, report, exit code)

def _estimate(cfg):
    table = build_table(cfg)
    with _Clock() as clk:
        est = estimate_pass(table, TestSpec(cfg.k, cfg.ell, cfg.trials, cfg.seed), cfg.threads)
    return [make_row(cfg, f"alpha_{cfg.k}{cfg.ell}{cfg.k}", est, clk.ms)], \
        {"table": table.descriptor(), "estimate": est.as_dict()}, EXIT_OK


def _compare(cfg):
    table = build_table(cfg)
    with _Clock() as clk:
        rep = compare_variants(table, cfg.r, cfg.r_prime, cfg.trials, cfg.seed, threads=cfg.threads)
    rows = [make_row(cfg, f"alpha_{cfg.k}{cfg.r}{cfg.k}", rep.alpha_r, clk.ms / 2),
            make_row(cfg, f"alpha_{cfg.k}{cfg.r_prime}{cfg.k}", rep.alpha_r_prime, clk.ms / 2)]
    return rows, {"table": table.descriptor(), "report": rep.as_dict()}, EXIT_OK


def _spectra(cfg):
    report = {}
    if cfg.graph:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            G = inclusion_graph(cfg.graph, cfg.q, cfg.m)
        sv = G.singular_values()
        report["inclusion"] = {"graph": G.graph_id, "q": cfg.q, "m": G.m, "regime_ok": G.regime_ok,
                               "left": len(G.left), "right": len(G.right),
                               "second_singular": float(sv[1]), "top_singular": float(sv[0]),
                               "approximation": APPROX_SECOND_SINGULAR[G.graph_id](cfg.q)}
    else:
        spec = GrassmannSpec(cfg.q, cfg.n, cfg.k, cfg.affine)
        report["grassmann"] = brute_spectrum(spec).as_dict()
    return [], report, EXIT_OK


def _decoder_params(cfg):
    return DecoderParams(seed=cfg.seed, seeds=cfg.decode_seeds, threads=cfg.threads,
                         agreement_trials=min(cfg.trials, 10**6))


def _decode(cfg):
    table = build_table(cfg)
    with _Clock() as clk:
        rep = decode_report(table, _decoder_params(cfg))
    rows = [make_row(cfg, "epsilon_hat", rep.epsilon_hat, clk.ms)]
    rows += [make_row(cfg, f"agreement_{i}", c.agreement, clk.ms) for i, c in enumerate(rep.candidates)]
    code = EXIT_OK if rep.candidates else EXIT_EMPTY
    return rows, {"table": table.descriptor(), "decode": rep.as_dict()}, code


def _planted_gap(cfg):
    if cfg.table is None:
        cfg = dataclasses.replace(cfg, table_kind="planted")
    table = build_table(cfg)
    ell = cfg.k - 1
    with _Clock() as clk:
        passing = estimate_pass(table, TestSpec(cfg.k, ell, cfg.trials, cfg.seed), cfg.threads)
        rep = decode_report(table, _decoder_params(cfg))
    best = max((c.agreement for c in rep.candidates), key=lambda e: e.p_hat, default=None)
    best_upper = best.upper if best is not None else 0.0
    gap = {"pass": passing.as_dict(), "pass_lower": passing.lower,
           "best_agreement": None if best is None else best.as_dict(),
           "best_agreement_upper": best_upper,
           "candidates": len(rep.candidates),
           "ratio_ok": passing.lower >= 5 * best_upper}
    rows = [make_row(cfg, f"alpha_{cfg.k}{ell}{cfg.k}", passing, clk.ms)]
    rows += [make_row(cfg, f"agreement_{i}", c.agreement, clk.ms) for i, c in enumerate(rep.candidates)]
    return rows, {"table": table.descriptor(), "gap": gap, "decode": rep.as_dict()}, EXIT_OK


def _rs_test(cfg):
    deg = cfg.d if cfg.rs_degree is None else cfg.rs_degree
    f = random_poly(cfg.n, deg, cfg.q, make_rng(sub_seed(cfg.seed, 12), 0))
    with _Clock() as clk:
        est = rs_neighborhood_test(f, cfg.d, cfg.trials, make_rng(cfg.seed, 0))
    report = {"f": f.to_record(), "f_degree": f.degree(), "test_degree": cfg.d,
              "failure_rate": est.as_dict()}
    return [make_row(cfg, "rs_failure", est, clk.ms)], report, EXIT_OK


RUNNERS = {"estimate": _estimate, "compare-variants": _compare, "spectra": _spectra,
           "planted-gap": _planted_gap, "decode": _decode, "rs-test": _rs_test}


def execute(cfg: ExperimentConfig):
    """Run one experiment in memory; returns ``(rows, report, exit code)``."""
    cfg.validate()
    return RUNNERS[cfg.kind](cfg)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=ResultRow.columns(), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(dataclasses.asdict(r))
    return buf.getvalue()


def stable_rows(rows) -> list:
    """Rows without the columns that are excluded from the determinism contract."""
    return [{k: v for k, v in dataclasses.asdict(r).items() if k not in ResultRow.VOLATILE}
            for r in rows]


def run(cfg: ExperimentConfig, verify: bool = False) -> int:
    rows, report, code = execute(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(rows_to_csv(rows))
    report = {"config": cfg.to_dict(), "experiment_id": cfg.experiment_id(),
              "version": __version__, **report}
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=str))
    if verify:
        again, _, _ = execute(dataclasses.replace(cfg, threads=max(1, cfg.threads % 4 + 1)))
        if stable_rows(again) != stable_rows(rows):
            print("verify: re-run produced different rows", file=sys.stderr)
            return EXIT_FAILURE
        print("verify: re-run matches", file=sys.stderr)
    return code


# ---------------------------------------------------------------------------
# argument handling

def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ldtlab", description=__doc__.splitlines()[0])
    p.add_argument("kind", nargs="?", choices=KINDS, help="experiment to run")
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    for name in ("q", "n", "d", "k", "ell", "trials", "seed", "threads", "r", "m",
                 "rs-degree", "decode-seeds"):
        p.add_argument(f"--{name}", type=int, default=None)
    p.add_argument("--r-prime", type=int, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--table-kind", choices=("honest", "corrupted", "planted"), default=None)
    p.add_argument("--table", help="table descriptor JSON file")
    p.add_argument("--graph", help="inclusion graph G1..G6 for the spectra experiment")
    p.add_argument("--affine", action="store_true", default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--verify", action="store_true", help="re-run and compare rows")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    data = ExperimentConfig().to_dict()
    if args.config:
        try:
            data.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {args.config}: {e}") from e
    if args.table:
        try:
            data["table"] = json.loads(Path(args.table).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read table descriptor {args.table}: {e}") from e
    for key, value in vars(args).items():
        if key in ("config", "table", "verify") or value is None:
            continue
        data["kind" if key == "kind" else key] = value
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.kind is None and not args.config:
            raise UsageError("an experiment kind is required")
        return run(cfg, verify=args.verify)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceCapError, RareEventError) as e:
        print(f"resource cap: {e}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
