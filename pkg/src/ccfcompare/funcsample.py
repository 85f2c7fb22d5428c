"""Grouped multivariate functional samples and their pooled covariance."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ccf import LagGrid, ccf_curve
from .errors import ValidationError
from .ingest import CurveRecord, Session, aligned_series


class CovarianceHeterogeneityWarning(UserWarning):
    """Group-specific covariance traces differ markedly."""


@dataclass(frozen=True)
class MultiCurveSample:
    """One session's ``p x M`` matrix of curves, one row per measure."""

    session_id: str
    grid: LagGrid
    curves: np.ndarray
    measures: tuple[str, ...]

    def __post_init__(self):
        curves = np.array(self.curves, dtype=float, ndmin=2)
        if curves.shape != (len(self.measures), self.grid.M):
            raise ValidationError(
                f"{self.session_id}: curves shape {curves.shape} does not match "
                f"{len(self.measures)} measures x {self.grid.M} lags")
        curves.setflags(write=False)
        object.__setattr__(self, "curves", curves)
        object.__setattr__(self, "measures", tuple(self.measures))


def session_curves(record: Session | CurveRecord, grid: LagGrid, measures: Sequence[str],
                   *, divisor: str = "T") -> MultiCurveSample:
    """CCF of dopamine against each measure, or the stored curves for precomputed records."""
    if isinstance(record, CurveRecord):
        if record.lags.size != grid.M or not np.allclose(record.lags, grid.values, atol=1e-9):
            raise ValidationError(f"{record.id}: stored curve lags do not match the lag grid")
        missing = [m for m in measures if m not in record.curves]
        if missing:
            raise ValidationError(f"{record.id}: curve file lacks measure(s) {', '.join(missing)}")
        return MultiCurveSample(record.id, grid, np.vstack([record.curves[m] for m in measures]),
                                tuple(measures))
    dop, series = aligned_series(record, measures)
    rows = [ccf_curve(dop, series[m], grid, record.sample_rate_hz, divisor=divisor).rho
            for m in measures]
    return MultiCurveSample(record.id, grid, np.vstack(rows), tuple(measures))


def _stack(samples: Sequence[MultiCurveSample]) -> np.ndarray:
    return np.stack([s.curves for s in samples]) if samples else np.empty((0, 0, 0))


@dataclass(frozen=True)
class GroupedSample:
    """Two groups of curve samples on a shared grid and measure list.

    ``y1`` and ``y2`` hold the data as ``(n_i, p, M)`` arrays.
    """

    y1: np.ndarray
    y2: np.ndarray
    grid: LagGrid
    measures: tuple[str, ...]
    ids1: tuple[str, ...] = ()
    ids2: tuple[str, ...] = ()

    def __post_init__(self):
        y1 = np.asarray(self.y1, dtype=float)
        y2 = np.asarray(self.y2, dtype=float)
        if y1.ndim != 3 or y2.ndim != 3 or y1.shape[1:] != y2.shape[1:]:
            raise ValidationError("groups must be (n_i, p, M) arrays with matching p and M")
        if y1.shape[1:] != (len(self.measures), self.grid.M):
            raise ValidationError("group arrays do not match the grid and measures")
        if y1.shape[0] < 2 or y2.shape[0] < 2:
            raise ValidationError("each group needs at least 2 sessions")
        for arr in (y1, y2):
            arr.setflags(write=False)
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "y2", y2)
        object.__setattr__(self, "measures", tuple(self.measures))

    @classmethod
    def from_samples(cls, group1: Sequence[MultiCurveSample],
                     group2: Sequence[MultiCurveSample]) -> "GroupedSample":
        if not group1 or not group2:
            raise ValidationError("empty group")
        ref = group1[0]
        for s in (*group1, *group2):
            if s.grid != ref.grid or s.measures != ref.measures:
                raise ValidationError(f"{s.session_id}: grid or measures differ from {ref.session_id}")
        return cls(_stack(group1), _stack(group2), ref.grid, ref.measures,
                   tuple(s.session_id for s in group1), tuple(s.session_id for s in group2))

    @property
    def n1(self) -> int:
        return self.y1.shape[0]

    @property
    def n2(self) -> int:
        return self.y2.shape[0]

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def p(self) -> int:
        return self.y1.shape[1]


def group_mean(samples) -> np.ndarray:
    """Elementwise mean curve matrix of a group (list of samples or stacked array)."""
    if isinstance(samples, np.ndarray):
        arr = samples
    else:
        if len(samples) == 0:
            raise ValidationError("empty group")
        arr = _stack(samples)
    if arr.shape[0] == 0:
        raise ValidationError("empty group")
    return arr.mean(axis=0)


@dataclass(frozen=True)
class PooledCovFunction:
    """Pooled covariance ``blocks[s, t]`` (a ``p x p`` matrix) for every lag pair."""

    grid: LagGrid
    blocks: np.ndarray

    def __getitem__(self, st) -> np.ndarray:
        s, t = st
        return self.blocks[s, t]

    def diagonal(self) -> np.ndarray:
        """``(M, p, p)`` stack of within-lag blocks."""
        m = np.arange(self.grid.M)
        return self.blocks[m, m]


def _residuals(g: GroupedSample) -> np.ndarray:
    return np.concatenate([g.y1 - g.y1.mean(axis=0), g.y2 - g.y2.mean(axis=0)])


def pooled_covariance(g: GroupedSample) -> PooledCovFunction:
    if g.n <= 2:
        raise ValidationError("insufficient sessions: need n1 + n2 > 2")
    r = _residuals(g)
    blocks = np.einsum("nis,njt->stij", r, r) / (g.n - 2)
    # symmetrise so blocks[s, t] == blocks[t, s].T holds bit for bit
    blocks = 0.5 * (blocks + blocks.transpose(1, 0, 3, 2))
    blocks.setflags(write=False)
    return PooledCovFunction(g.grid, blocks)


def pointwise_covariance(y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
    """Within-lag pooled covariance, ``(..., M, p, p)``, for batched ``(..., n_i, p, M)`` groups."""
    n = y1.shape[-3] + y2.shape[-3]
    r1 = y1 - y1.mean(axis=-3, keepdims=True)
    r2 = y2 - y2.mean(axis=-3, keepdims=True)
    cov = (np.einsum("...nim,...njm->...mij", r1, r1)
           + np.einsum("...nim,...njm->...mij", r2, r2)) / (n - 2)
    return 0.5 * (cov + np.swapaxes(cov, -1, -2))


def check_homogeneity(g: GroupedSample, ratio: float = 4.0) -> float:
    """Ratio of group-specific integrated covariance traces; warns when above ``ratio``."""
    tr = []
    for y in (g.y1, g.y2):
        r = y - y.mean(axis=0)
        tr.append(float(np.sum(r * r)) / (y.shape[0] - 1))
    hi, lo = max(tr), min(tr)
    if hi == 0:
        return 1.0
    value = np.inf if lo == 0 else hi / lo
    if value > ratio:
        warnings.warn(
            f"group covariance traces differ by a factor of {value:.3g}; "
            "the common-covariance assumption may not hold",
            CovarianceHeterogeneityWarning, stacklevel=2)
    return value
