"""Command-line front end.

Subcommands::

    esnlab list
    esnlab run <name|config.yaml|metadata.json> [--seed S] [--jobs J] [--out DIR] [--override k=v ...]
    esnlab predict  [...]   theory-only curves
    esnlab capacity [...]   capacity surfaces (defaults to fig6)
    esnlab fivebit  [...]   minimal reservoir for the 5-bit task (defaults to figS6)
    esnlab geometry [...]   readout geometry (defaults to fig8)

Exit codes: 0 success, 1 other library error, 2 configuration error,
3 numerical error, 4 capability error.
"""
from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .errors import CapabilityError, ConfigError, EsnLabError, NumericalError, ParameterError
from .experiments import REGISTRY, apply_override, descriptor_for, format_row, resolve, run_descriptor
from .tasks import default_jobs

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CAPABILITY = 0, 1, 2, 3, 4


def load_descriptor(source: str) -> dict:
    """A registry name, a YAML config, or a metadata sidecar from an earlier run."""
    if source in REGISTRY:
        return descriptor_for(source)
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"neither a registered experiment nor a file: {source!r}", "experiment")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} does not contain a mapping")
    return data["descriptor"] if "descriptor" in data else data


def _build(args, default: str | None = None, extra: dict | None = None) -> dict:
    source = getattr(args, "source", None) or default
    desc = load_descriptor(source) if source else {}
    for key, value in (extra or {}).items():
        if value is not None:
            apply_override(desc, f"{key}={json.dumps(value)}")
    if args.seed is not None:
        desc["seed"] = args.seed
    for text in args.override or []:
        apply_override(desc, text)
    return resolve(desc)


def _write_table(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(format_row(columns, row))


def execute(desc: dict, out: Path, jobs: int | None, argv=None) -> list[Path]:
    """Run a resolved descriptor and write its tables plus a metadata sidecar.

    Files are written only after the run succeeds; if writing fails midway,
    everything created by this call is removed.
    """
    start = time.perf_counter()
    result = run_descriptor(desc, jobs)
    wall = time.perf_counter() - start
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for name, (columns, rows) in result["tables"].items():
            path = out / f"{name}.csv"
            written.append(path)
            _write_table(path, columns, rows)
        meta = {
            "descriptor": desc,
            "seed": desc["seed"],
            "jobs": jobs,
            "outputs": [p.name for p in written],
            "notes": result.get("notes", []),
            "summary": result.get("summary", {}),
            "wall_time_s": wall,
            "versions": {"esnlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                         "python": platform.python_version()},
            "argv": list(argv) if argv is not None else None,
        }
        path = out / "metadata.json"
        written.append(path)
        path.write_text(json.dumps(meta, indent=2, default=_json_default) + "\n")
    except BaseException:
        for p in written:
            if p.exists():
                p.unlink()
        raise
    return written


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (tuple, np.ndarray)):
        return list(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _grid(text: str | None):
    if text is None:
        return None
    parts = [float(v) for v in text.split(":")]
    if len(parts) == 1:
        return {"start": parts[0], "stop": parts[0], "step": 1.0}
    if len(parts) != 3:
        raise ConfigError("grid must be start:stop:step", "grid")
    return {"start": parts[0], "stop": parts[1], "step": parts[2]}


def _int_list(text: str | None):
    return None if text is None else [int(v) for v in text.split(",")]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="experiment seed (overrides the config)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: available CPUs)")
    p.add_argument("--out", type=Path, default=None, help="output directory (default: results/<experiment>)")
    p.add_argument("--override", action="append", metavar="KEY=VALUE",
                   help="dotted config override, value parsed as YAML; repeatable")
    p.add_argument("--dry-run", action="store_true", help="print the resolved config and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esnlab", description="Echo state network memory experiments.")
    parser.add_argument("--version", action="version", version=f"esnlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list registered experiments")

    p = sub.add_parser("run", help="run a registered experiment or a config file")
    p.add_argument("source", help="registry name, YAML config, or metadata.json of an earlier run")
    _common(p)

    p = sub.add_parser("predict", help="theory-only accuracy curves from hyperparameters")
    p.add_argument("source", nargs="?", default=None)
    p.add_argument("--variant")
    p.add_argument("--kind")
    p.add_argument("--N", type=int)
    p.add_argument("--D", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--delays", help="comma-separated delays")
    p.add_argument("--G", help="comma-separated stored lengths (V1)")
    _common(p)

    p = sub.add_parser("capacity", help="capacity surface over a (beta, gamma) grid")
    p.add_argument("source", nargs="?", default=None)
    p.add_argument("--beta", help="start:stop:step")
    p.add_argument("--gamma", help="start:stop:step")
    p.add_argument("--predictor", choices=["analytic", "empirical"])
    _common(p)

    p = sub.add_parser("fivebit", help="minimal reservoir size for the 5-bit memory task")
    p.add_argument("source", nargs="?", default=None)
    p.add_argument("--T", help="comma-separated distractor periods")
    p.add_argument("--search", choices=["theory", "empirical", "both"])
    p.add_argument("--seeds", type=int)
    _common(p)

    p = sub.add_parser("geometry", help="readout geometry against delay")
    p.add_argument("source", nargs="?", default=None)
    _common(p)
    return parser


def _descriptor(args) -> dict:
    if args.command == "run":
        return _build(args)
    if args.command == "predict":
        extra = {f"base.{k}": getattr(args, k) for k in ("variant", "kind", "N", "D", "alpha", "beta", "gamma")}
        extra["base.delays"] = _int_list(args.delays)
        extra["base.G"] = _int_list(args.G)
        desc = _build(args, None, {"experiment": "predict", "mode": "predict", **extra})
        return desc
    if args.command == "capacity":
        return _build(args, "fig6", {"surface.beta": _grid(args.beta), "surface.gamma": _grid(args.gamma),
                                     "surface.predictor": args.predictor})
    if args.command == "fivebit":
        search = None if args.search is None else (["theory", "empirical"] if args.search == "both"
                                                   else [args.search])
        return _build(args, "figS6", {"fivebit.T": _int_list(args.T), "fivebit.search": search,
                                      "fivebit.seeds": args.seeds})
    if args.command == "geometry":
        return _build(args, "fig8")
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    if args.command == "list":
        width = max(len(n) for n in REGISTRY)
        for name, entry in REGISTRY.items():
            print(f"{name:<{width}}  {entry['mode']:<8}  {entry['description']}")
        return EXIT_OK
    try:
        desc = _descriptor(args)
        if args.dry_run:
            print(yaml.safe_dump(desc, sort_keys=False), end="")
            return EXIT_OK
        out = args.out or Path("results") / desc["experiment"]
        jobs = args.jobs if args.jobs is not None else default_jobs()
        written = execute(desc, out, jobs, argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except EsnLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
