"""Empirical cross-correlation functions on a symmetric lag grid.

Convention: ``gamma_xy(l) = (1/T) * sum_t (x[t] - xbar) * (y[t+l] - ybar)``
over the ``T - |l|`` overlapping pairs, with full-sample means. A positive
lag pairs ``x`` now with ``y`` later, so the curve peaks at positive lags
when ``y`` follows ``x``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, ValidationError


@dataclass(frozen=True)
class LagGrid:
    """Uniform lag grid ``a = h_0 < ... < h_{M-1} = b`` in seconds.

    ``M = 1`` with ``a == b`` is accepted as a single-lag grid; its lone
    quadrature weight is 1 so integrals reduce to point evaluation.
    """

    a: float = -1.0
    b: float = 1.0
    M: int = 41

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValidationError("grid size M must be a positive integer")
        if self.M == 1 and self.a != self.b:
            raise ValidationError("single-lag grid needs a == b")
        if self.M > 1 and not self.b > self.a:
            raise ValidationError("lag window needs b > a")

    @property
    def values(self) -> np.ndarray:
        if self.M == 1:
            return np.array([float(self.a)])
        return np.linspace(self.a, self.b, self.M)

    @property
    def delta_h(self) -> float:
        return 0.0 if self.M == 1 else (self.b - self.a) / (self.M - 1)

    @property
    def width(self) -> float:
        return self.b - self.a

    def weights(self, rule: str = "trapezoid") -> np.ndarray:
        """Quadrature weights for integrating a grid function over ``[a, b]``."""
        if self.M == 1:
            return np.ones(1)
        if rule == "trapezoid":
            w = np.full(self.M, self.delta_h)
            w[[0, -1]] *= 0.5
            return w
        if rule == "riemann":
            return np.full(self.M, self.delta_h)
        raise ValidationError(f"unknown quadrature rule {rule!r}")

    def sample_lags(self, sample_rate_hz: float) -> np.ndarray:
        """Grid lags rounded to whole samples; collisions are an error."""
        lags = np.rint(self.values * sample_rate_hz).astype(int)
        if np.unique(lags).size != lags.size:
            raise ValidationError(
                f"grid too fine for sample rate {sample_rate_hz} Hz: lags collide after rounding")
        return lags


@dataclass(frozen=True)
class CcfCurve:
    grid: LagGrid
    rho: np.ndarray


def _validate_pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValidationError("series must be 1-d with equal lengths")
    if x.size < 2:
        raise ValidationError("too short: need at least 2 samples")
    return x, y


def _lagged_sum(xc: np.ndarray, yc: np.ndarray, lag: int) -> float:
    n = xc.size
    if lag >= 0:
        return float(np.dot(xc[: n - lag], yc[lag:]))
    return float(np.dot(xc[-lag:], yc[: n + lag]))


def cross_covariance(x, y, lag: int, *, divisor: str = "T") -> float:
    """Sample cross-covariance of ``x[t]`` and ``y[t+lag]``.

    ``divisor="T"`` is the biased correlogram estimator; ``"overlap"``
    divides by ``T - |lag|`` instead.
    """
    x, y = _validate_pair(x, y)
    n = x.size
    if abs(lag) >= n:
        raise ValidationError(f"lag exceeds series: |{lag}| >= {n}")
    s = _lagged_sum(x - x.mean(), y - y.mean(), int(lag))
    return s / (n if divisor == "T" else n - abs(lag))


def ccf_at_lags(x, y, lags, *, divisor: str = "T") -> np.ndarray:
    """Cross-correlation at integer sample lags."""
    x, y = _validate_pair(x, y)
    n = x.size
    lags = np.asarray(lags, dtype=int)
    if np.any(np.abs(lags) >= n):
        raise ValidationError(f"lag exceeds series: max |lag| {np.abs(lags).max()} >= {n}")
    xc = x - x.mean()
    yc = y - y.mean()
    vx = float(np.dot(xc, xc)) / n
    vy = float(np.dot(yc, yc)) / n
    if vx <= 0 or vy <= 0:
        raise DegenerateError("degenerate series: zero variance")
    scale = np.sqrt(vx * vy)
    out = np.empty(lags.size)
    for k, lag in enumerate(lags):
        denom = n if divisor == "T" else n - abs(int(lag))
        out[k] = _lagged_sum(xc, yc, int(lag)) / denom / scale
    return out


def ccf_curve(x, y, grid: LagGrid, sample_rate_hz: float, *, divisor: str = "T") -> CcfCurve:
    return CcfCurve(grid, ccf_at_lags(x, y, grid.sample_lags(sample_rate_hz), divisor=divisor))


def write_curve_csv(path, curve: CcfCurve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lag_seconds", "rho"])
        for h, r in zip(curve.grid.values, curve.rho):
            w.writerow([repr(float(h)), repr(float(r))])
