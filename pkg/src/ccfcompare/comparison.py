"""End-to-end two-group comparison and its report formats."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._seeding import derive_seed
from .ccf import LagGrid
from .errors import DegenerateError, ValidationError
from .funcsample import GroupedSample, check_homogeneity, pooled_covariance, session_curves
from .globaltests import (PointwiseCurve, WsCalibration, bootstrap_fmax, f_int, f_max,
                          hotelling_pointwise, permutation_test, ws_calibrate, ws_pvalue)
from .ingest import DEFAULT_MEASURES, CurveRecord, Dataset
from .query import FactorQuery

RESULTS_HEADER = ("comparison", "measures", "f_int", "p_int", "f_max", "p_max")
MIN_GROUP_SIZE = 3


@dataclass(frozen=True)
class ComparisonConfig:
    grid: LagGrid = field(default_factory=LagGrid)
    B: int = 1000
    R: int = 0
    seed: int = 0
    alpha: float = 0.05
    quadrature: str = "trapezoid"
    divisor: str = "T"
    window_start: float | None = None
    window_stop: float | None = None
    window_last: float | None = None
    work_limit: int = 10**9

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must lie in (0, 1)")
        if self.B < 1:
            raise ValidationError("bootstrap B must be at least 1")
        if self.R < 0:
            raise ValidationError("permutation R must be >= 0")
        if self.quadrature not in ("trapezoid", "riemann"):
            raise ValidationError(f"unknown quadrature {self.quadrature!r}")
        if self.divisor not in ("T", "overlap"):
            raise ValidationError(f"unknown CCF divisor {self.divisor!r}")


@dataclass(frozen=True)
class TestReport:
    comparison: str
    measures: tuple[str, ...]
    n1: int
    n2: int
    f_int: float
    p_int: float
    f_max: float
    p_max: float
    arg_max_lag: float
    pointwise: PointwiseCurve
    calibration: WsCalibration | None
    bootstrap_B: int
    seed: int
    bootstrap_seed: int
    quadrature: str = "trapezoid"
    alpha: float = 0.05
    p_int_bootstrap_ws: float | None = None
    permutation_R: int = 0
    p_int_permutation: float | None = None
    p_max_permutation: float | None = None
    groups: tuple[tuple[str, ...], tuple[str, ...]] = ((), ())

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        cal = self.calibration
        return {
            "comparison": self.comparison,
            "measures": list(self.measures),
            "n1": self.n1,
            "n2": self.n2,
            "f_int": self.f_int,
            "p_int": self.p_int,
            "f_max": self.f_max,
            "p_max": self.p_max,
            "arg_max_lag": self.arg_max_lag,
            "reject_int": self.p_int < self.alpha,
            "reject_max": self.p_max < self.alpha,
            "alpha": self.alpha,
            "quadrature": self.quadrature,
            "calibration": None if cal is None else {
                "beta": cal.beta, "d": cal.d, "mean_hat": cal.mean_hat, "var_hat": cal.var_hat},
            "p_int_bootstrap_ws": self.p_int_bootstrap_ws,
            "bootstrap_B": self.bootstrap_B,
            "seed": self.seed,
            "bootstrap_seed": self.bootstrap_seed,
            "permutation_R": self.permutation_R,
            "p_int_permutation": self.p_int_permutation,
            "p_max_permutation": self.p_max_permutation,
            "groups": {"group1": list(self.groups[0]), "group2": list(self.groups[1])},
            "pointwise": {
                "lag_seconds": self.pointwise.grid.values.tolist(),
                "t_n": self.pointwise.t_values.tolist(),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def csv_row(self) -> list[str]:
        return [self.comparison, "+".join(self.measures), repr(self.f_int), repr(self.p_int),
                repr(self.f_max), repr(self.p_max)]


def write_results_csv(path, reports: Sequence[TestReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for rep in reports:
            w.writerow(rep.csv_row())


def write_pointwise_csv(path, pw: PointwiseCurve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lag_seconds", "t_n"])
        for h, t in zip(pw.grid.values, pw.t_values):
            w.writerow([repr(float(h)), repr(float(t))])


def grouped_from_dataset(dataset: Dataset, query: FactorQuery, measures: Sequence[str],
                         config: ComparisonConfig) -> GroupedSample:
    ids1, ids2 = query.select({sid: rec.labels for sid, rec in dataset.records.items()})
    for ids in (ids1, ids2):
        if len(ids) < MIN_GROUP_SIZE:
            raise ValidationError(
                f"underpowered comparison: {query.label} has a group with {len(ids)} "
                f"session(s); at least {MIN_GROUP_SIZE} required")

    def curves(sid):
        rec = dataset.records[sid]
        if not isinstance(rec, CurveRecord) and any(
                v is not None for v in (config.window_start, config.window_stop, config.window_last)):
            rec = rec.window(config.window_start, config.window_stop, config.window_last)
        return session_curves(rec, config.grid, measures, divisor=config.divisor)

    return GroupedSample.from_samples([curves(s) for s in ids1], [curves(s) for s in ids2])


def compare_grouped(g: GroupedSample, comparison: str, config: ComparisonConfig,
                    key: str | None = None) -> TestReport:
    """Both global tests on an assembled grouped sample."""
    key = comparison if key is None else key
    check_homogeneity(g)
    cov = pooled_covariance(g)
    pw = hotelling_pointwise(g, cov)
    fi = f_int(pw, config.quadrature)
    fm, arg = f_max(pw)
    try:
        cal = ws_calibrate(cov, g.grid, config.quadrature)
        p_int = ws_pvalue(fi, cal)
    except DegenerateError:
        if fi != 0.0:
            raise
        cal, p_int = None, 1.0
    boot_seed = derive_seed(config.seed, "bootstrap", key)
    boot = bootstrap_fmax(g, config.B, boot_seed, rule=config.quadrature,
                          work_limit=config.work_limit)
    ws_boot = boot.extra["ws_from_replicates"]
    p_int_perm = p_max_perm = None
    if config.R > 0:
        perm_seed = derive_seed(config.seed, "permutation", key)
        p_int_perm = permutation_test(g, "f_int", config.R, perm_seed, rule=config.quadrature).p_value
        p_max_perm = permutation_test(g, "f_max", config.R, perm_seed, rule=config.quadrature).p_value
    return TestReport(
        comparison=comparison, measures=g.measures, n1=g.n1, n2=g.n2,
        f_int=fi, p_int=p_int, f_max=fm, p_max=boot.p_value, arg_max_lag=arg,
        pointwise=pw, calibration=cal, bootstrap_B=config.B, seed=config.seed,
        bootstrap_seed=boot_seed, quadrature=config.quadrature, alpha=config.alpha,
        p_int_bootstrap_ws=None if ws_boot is None else ws_pvalue(fi, ws_boot),
        permutation_R=config.R, p_int_permutation=p_int_perm, p_max_permutation=p_max_perm,
        groups=(g.ids1, g.ids2))


def run_comparison(dataset: Dataset, query: FactorQuery | str,
                   measures: Sequence[str] = DEFAULT_MEASURES,
                   config: ComparisonConfig | None = None) -> TestReport:
    """Select groups, estimate curves and run both global tests."""
    config = config or ComparisonConfig()
    if isinstance(query, str):
        query = FactorQuery.parse(query)
    measures = tuple(measures)
    if not measures:
        raise ValidationError("measure set is empty")
    g = grouped_from_dataset(dataset, query, measures, config)
    return compare_grouped(g, query.label, config, key=f"{query.label}#{'+'.join(measures)}")
