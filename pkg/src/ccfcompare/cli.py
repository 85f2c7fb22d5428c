"""Command line entry point: ``ccfcompare {test,simulate,ccf}``.

Settings resolve as built-in defaults, then a JSON ``--config`` file, then
flags given explicitly on the command line. ``CCFCOMPARE_OUTPUT_DIR`` sets
the default output directory.

Exit codes: 0 success, 2 usage, 3 I/O failure, 4 validation failure,
5 degenerate statistics.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .ccf import LagGrid, ccf_curve, write_curve_csv
from .comparison import (ComparisonConfig, run_comparison, write_pointwise_csv,
                         write_results_csv)
from .errors import DegenerateError, ValidationError
from .funcsample import CovarianceHeterogeneityWarning
from .ingest import DEFAULT_MEASURES, MEASURES, CurveRecord, aligned_series, read_manifest
from .query import FactorQuery
from .simulate import load_scenario, write_scenario_dataset

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VALIDATION, EXIT_DEGENERATE = 0, 2, 3, 4, 5
OUTPUT_ENV = "CCFCOMPARE_OUTPUT_DIR"

DEFAULTS = {
    "manifest": None,
    "lag_min": -1.0,
    "lag_max": 1.0,
    "grid_size": 41,
    "measures": [list(DEFAULT_MEASURES)],
    "comparisons": [],
    "alpha": 0.05,
    "bootstrap": 1000,
    "permutations": 0,
    "seed": 0,
    "quadrature": "trapezoid",
    "divisor": "T",
    "window_start": None,
    "window_stop": None,
    "window_last": None,
    "jobs": 1,
    "out": None,
}


def _measure_set(text: str) -> list[str]:
    items = [m.strip() for m in text.split(",") if m.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty measure set")
    return items


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--lag-min", type=float, default=S, help="lag window start in seconds (default -1)")
    p.add_argument("--lag-max", type=float, default=S, help="lag window end in seconds (default 1)")
    p.add_argument("--grid-size", type=int, default=S, help="number of grid lags M (default 41)")
    p.add_argument("--window-start", type=float, default=S, help="keep samples with t >= this (s)")
    p.add_argument("--window-stop", type=float, default=S, help="keep samples with t < this (s)")
    p.add_argument("--window-last", type=float, default=S, help="keep only the final N seconds")
    p.add_argument("--divisor", choices=("T", "overlap"), default=S, help="CCF covariance divisor")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="ccfcompare", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("test", help="run two-group comparisons on a dataset")
    t.add_argument("--config", help="JSON file with RunConfig fields")
    t.add_argument("--manifest", default=S)
    t.add_argument("--compare", dest="comparisons", action="append", default=S,
                   help="factor query, e.g. 'region=NAc vs DS' or 'sex=F vs M | region=NAc'")
    t.add_argument("--measures", action="append", type=_measure_set, default=S,
                   help="comma-separated measure set; repeat for several sets")
    t.add_argument("--alpha", type=float, default=S)
    t.add_argument("--bootstrap", "-B", type=int, default=S, help="bootstrap replicates (default 1000)")
    t.add_argument("--permutations", "-R", type=int, default=S, help="permutation replicates, 0 = off")
    t.add_argument("--seed", type=int, default=S)
    t.add_argument("--quadrature", choices=("trapezoid", "riemann"), default=S)
    t.add_argument("--jobs", type=int, default=S, help="comparisons run in parallel")
    t.add_argument("--out", default=S, help=f"output directory (default ${OUTPUT_ENV} or ./results)")
    _add_grid_flags(t)

    s = sub.add_parser("simulate", help="write a synthetic dataset from a scenario JSON")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    c = sub.add_parser("ccf", help="export one session's CCF curve")
    c.add_argument("--manifest", required=True)
    c.add_argument("--session", required=True)
    c.add_argument("--measure", required=True, choices=MEASURES)
    c.add_argument("--out", required=True)
    _add_grid_flags(c)
    return parser


def resolve_settings(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            try:
                from_file = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{config_path}: invalid JSON: {exc}") from None
        unknown = set(from_file) - set(DEFAULTS)
        if unknown:
            raise ValidationError(f"{config_path}: unknown config key(s) {', '.join(sorted(unknown))}")
        if isinstance(from_file.get("measures"), list) and from_file["measures"] \
                and isinstance(from_file["measures"][0], str):
            from_file["measures"] = [from_file["measures"]]
        settings.update(from_file)
    settings.update({k: v for k, v in vars(args).items() if k in DEFAULTS})
    if settings["out"] is None:
        settings["out"] = os.environ.get(OUTPUT_ENV, "results")
    return settings


def _grid(settings: dict) -> LagGrid:
    return LagGrid(float(settings["lag_min"]), float(settings["lag_max"]), int(settings["grid_size"]))


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_")


def cmd_test(settings: dict) -> int:
    if not settings["comparisons"]:
        raise ValidationError("nothing to do: no comparisons given")
    if not settings["manifest"]:
        raise ValidationError("no manifest given")
    config = ComparisonConfig(
        grid=_grid(settings), B=int(settings["bootstrap"]), R=int(settings["permutations"]),
        seed=int(settings["seed"]), alpha=float(settings["alpha"]),
        quadrature=settings["quadrature"], divisor=settings["divisor"],
        window_start=settings["window_start"], window_stop=settings["window_stop"],
        window_last=settings["window_last"])
    dataset = read_manifest(settings["manifest"])
    jobs = [(FactorQuery.parse(q), tuple(m)) for q in settings["comparisons"]
            for m in settings["measures"]]

    def run(job):
        query, measures = job
        return run_comparison(dataset, query, measures, config)

    workers = max(1, int(settings["jobs"]))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            reports = list(pool.map(run, jobs))
    else:
        reports = [run(j) for j in jobs]

    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    for k, rep in enumerate(reports):
        stem = f"{k:02d}_{_slug(rep.comparison)}__{_slug('+'.join(rep.measures))}"
        (out / f"{stem}.json").write_text(rep.to_json(), encoding="utf-8")
        write_pointwise_csv(out / f"{stem}_pointwise.csv", rep.pointwise)
    write_results_csv(out / "results.csv", reports)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario["seed"] = args.seed
    write_scenario_dataset(scenario, args.out)
    return EXIT_OK


def cmd_ccf(args: argparse.Namespace, settings: dict) -> int:
    dataset = read_manifest(args.manifest)
    if args.session not in dataset.records:
        raise ValidationError(f"unknown session {args.session!r}")
    record = dataset.records[args.session]
    if isinstance(record, CurveRecord):
        raise ValidationError(f"session {args.session!r} holds precomputed curves, not raw series")
    if any(settings[k] is not None for k in ("window_start", "window_stop", "window_last")):
        record = record.window(settings["window_start"], settings["window_stop"], settings["window_last"])
    dop, series = aligned_series(record, [args.measure])
    curve = ccf_curve(dop, series[args.measure], _grid(settings), record.sample_rate_hz,
                      divisor=settings["divisor"])
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    write_curve_csv(out, curve)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    warnings.simplefilter("always", CovarianceHeterogeneityWarning)
    try:
        if args.cmd == "simulate":
            return cmd_simulate(args)
        settings = resolve_settings(args)
        if args.cmd == "test":
            return cmd_test(settings)
        return cmd_ccf(args, settings)
    except DegenerateError as exc:
        print(f"ccfcompare: degenerate statistics: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValidationError as exc:
        print(f"ccfcompare: validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        name = getattr(exc, "filename", None)
        msg = f"{exc.strerror}: {name}" if name and exc.strerror else str(exc)
        print(f"ccfcompare: I/O error: {msg}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
