"""Shared helpers for the experiment scripts: dataclass configs from flags, CSV output."""
import argparse
import csv
import dataclasses
import json
from pathlib import Path


def parse_config(cls, argv=None):
    """Build a ``cls`` instance; every dataclass field becomes a ``--flag``."""
    p = argparse.ArgumentParser(description=cls.__doc__)
    for f in dataclasses.fields(cls):
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        if isinstance(default, (list, tuple)):
            kind = type(default[0]) if default else str
            p.add_argument(f"--{f.name.replace('_', '-')}", nargs="+", type=kind, default=default)
        elif isinstance(default, bool):
            p.add_argument(f"--{f.name.replace('_', '-')}", type=lambda s: s.lower() in ("1", "true", "yes"),
                           default=default)
        else:
            p.add_argument(f"--{f.name.replace('_', '-')}", type=type(default), default=default)
    return cls(**vars(p.parse_args(argv)))


def write_rows(path, rows, config=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if rows:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    if config is not None:
        path.with_suffix(".config.json").write_text(json.dumps(dataclasses.asdict(config), indent=2))
    print(f"wrote {len(rows)} rows to {path}")
