"""Pointwise Hotelling statistics and the integrated / maximum global tests.

``F_int`` is calibrated analytically by matching the first two moments of its
chi-square-mixture null to a scaled chi-square ``beta * chi2_d``. ``F_max`` is
calibrated by resampling the within-group residual curves. A permutation test
on either statistic serves as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc

from ._seeding import replicate_rng
from .ccf import LagGrid
from .errors import DegenerateError, ValidationError
from .funcsample import GroupedSample, PooledCovFunction, pointwise_covariance

RIDGE_EPS = 1e-8
# relative size below which a covariance block or a mean difference counts as zero
ZERO_TOL = 1e-12
DEFAULT_WORK_LIMIT = 10**9


@dataclass(frozen=True)
class PointwiseCurve:
    grid: LagGrid
    t_values: np.ndarray


@dataclass(frozen=True)
class WsCalibration:
    beta: float
    d: float
    mean_hat: float
    var_hat: float


@dataclass(frozen=True)
class ResamplingResult:
    """Observed statistic, replicate statistics and add-one p-value."""

    observed: float
    replicates: np.ndarray
    p_value: float
    seed: int
    extra: dict = field(default_factory=dict)


def _data_scale(*arrays) -> float:
    return max(float(np.max(np.abs(a))) if a.size else 0.0 for a in arrays)


def _quadratic_form(delta, cov, scale, degenerate="raise", lags=None):
    """``delta' cov^{-1} delta`` over trailing ``(M, p)`` / ``(M, p, p)`` axes.

    Near-singular blocks get a scale-relative ridge before solving. Blocks
    that are numerically zero give 0 when ``delta`` is also zero; otherwise
    they raise, or yield ``inf`` when ``degenerate="inf"``.
    """
    p = cov.shape[-1]
    eig = np.linalg.eigvalsh(cov)
    lam_min, lam_max = eig[..., 0], eig[..., -1]
    zero_cov = lam_max <= (ZERO_TOL * scale) ** 2
    zero_delta = np.max(np.abs(delta), axis=-1) <= ZERO_TOL * scale
    near_singular = (lam_min <= RIDGE_EPS * lam_max) & ~zero_cov
    cov = cov.copy()
    if near_singular.any():
        ridge = RIDGE_EPS * np.trace(cov, axis1=-2, axis2=-1) / p
        cov[near_singular] += ridge[near_singular][:, None, None] * np.eye(p)
    cov[zero_cov] = np.eye(p)
    sol = np.linalg.solve(cov, delta[..., None])[..., 0]
    out = np.einsum("...i,...i->...", delta, sol)
    bad = zero_cov & ~zero_delta
    if bad.any():
        if degenerate == "raise":
            where = np.argwhere(bad)[0][-1]
            h = lags[where] if lags is not None else where
            raise DegenerateError(f"degenerate covariance at lag {h:g}")
        out[bad] = np.inf
    out[zero_cov & zero_delta] = 0.0
    return np.maximum(out, 0.0)


def _pointwise_batch(y1, y2, scale, degenerate="raise", lags=None):
    """Pointwise Hotelling curves for batched groups ``(..., n_i, p, M)`` -> ``(..., M)``."""
    n1, n2 = y1.shape[-3], y2.shape[-3]
    delta = np.swapaxes(y1.mean(axis=-3) - y2.mean(axis=-3), -1, -2)
    cov = pointwise_covariance(y1, y2)
    return (n1 * n2 / (n1 + n2)) * _quadratic_form(delta, cov, scale, degenerate, lags)


def hotelling_pointwise(g: GroupedSample, cov: PooledCovFunction | None = None) -> PointwiseCurve:
    """``T_n(h) = n1 n2 / n * delta(h)' Gamma(h, h)^{-1} delta(h)`` on every grid lag."""
    scale = _data_scale(g.y1, g.y2)
    if cov is None:
        diag = pointwise_covariance(g.y1, g.y2)
    else:
        diag = cov.diagonal()
    delta = (g.y1.mean(axis=0) - g.y2.mean(axis=0)).T
    t = (g.n1 * g.n2 / g.n) * _quadratic_form(delta, diag, scale, "raise", g.grid.values)
    return PointwiseCurve(g.grid, t)


def f_int(pw: PointwiseCurve, rule: str = "trapezoid") -> float:
    return float(np.dot(pw.grid.weights(rule), pw.t_values))


def f_max(pw: PointwiseCurve) -> tuple[float, float]:
    """Largest pointwise value and the smallest lag attaining it."""
    k = int(np.argmax(pw.t_values))
    return float(pw.t_values[k]), float(pw.grid.values[k])


def inv_sqrt_spd(mat: np.ndarray, eps: float = RIDGE_EPS) -> np.ndarray:
    """Symmetric inverse square root with eigenvalues floored at ``eps * lambda_max``."""
    lam, vec = np.linalg.eigh(mat)
    top = lam[-1]
    if not top > 0 or lam[0] < -1e-10 * top:
        raise DegenerateError("matrix is not symmetric positive definite")
    lam = np.maximum(lam, eps * top)
    return (vec / np.sqrt(lam)) @ vec.T


def standardized_covariance(cov: PooledCovFunction) -> np.ndarray:
    """``Gamma*(s, t) = Gamma(s,s)^{-1/2} Gamma(s,t) Gamma(t,t)^{-1/2}`` as ``(M, M, p, p)``."""
    diag = cov.diagonal()
    traces = np.trace(diag, axis1=-2, axis2=-1)
    top = float(traces.max())
    roots = np.empty_like(diag)
    for m, block in enumerate(diag):
        try:
            if not top > 0 or traces[m] <= ZERO_TOL**2 * top:
                raise DegenerateError
            roots[m] = inv_sqrt_spd(block)
        except DegenerateError:
            raise DegenerateError(f"cannot standardize at lag {cov.grid.values[m]:g}") from None
    return np.einsum("sij,stjk,tkl->stil", roots, cov.blocks, roots)


def ws_calibrate(cov: PooledCovFunction, grid: LagGrid | None = None,
                 rule: str = "trapezoid") -> WsCalibration:
    """Match mean and variance of the mixture null of ``F_int`` to ``beta * chi2_d``."""
    grid = grid or cov.grid
    w = grid.weights(rule)
    gstar = standardized_covariance(cov)
    m = np.arange(grid.M)
    mean_hat = float(np.dot(w, np.trace(gstar[m, m], axis1=-2, axis2=-1)))
    # tr(G*(s,t) G*(t,s)) is the squared Frobenius norm since G*(t,s) = G*(s,t)'
    frob = np.einsum("stij,stij->st", gstar, gstar)
    var_hat = float(2.0 * w @ frob @ w)
    if not (mean_hat > 0 and var_hat > 0):
        raise DegenerateError("invalid calibration moments")
    return WsCalibration(var_hat / (2 * mean_hat), 2 * mean_hat**2 / var_hat, mean_hat, var_hat)


def ws_pvalue(f_int_value: float, cal: WsCalibration) -> float:
    """Upper tail of ``beta * chi2_d`` at ``f_int_value``."""
    if not (cal.beta > 0 and cal.d > 0):
        raise ValidationError("invalid calibration: beta and d must be positive")
    if f_int_value <= 0:
        return 1.0
    return float(gammaincc(cal.d / 2.0, f_int_value / (2.0 * cal.beta)))


def _moment_match(values: np.ndarray) -> WsCalibration | None:
    values = values[np.isfinite(values)]
    if values.size < 2:
        return None
    mean, var = float(values.mean()), float(values.var(ddof=1))
    if not (mean > 0 and var > 0):
        return None
    return WsCalibration(var / (2 * mean), 2 * mean**2 / var, mean, var)


def _add_one_pvalue(observed: float, replicates: np.ndarray) -> float:
    # small slack so replicates equal to the observed value up to roundoff count as ties
    tol = 1e-10 * max(1.0, abs(observed))
    return (1 + int(np.count_nonzero(replicates >= observed - tol))) / (replicates.size + 1)


def bootstrap_fmax(g: GroupedSample, B: int = 1000, seed: int = 0, *,
                   rule: str = "trapezoid", work_limit: int = DEFAULT_WORK_LIMIT,
                   chunk: int = 250) -> ResamplingResult:
    """Residual bootstrap calibration of ``F_max``.

    Each replicate draws ``n_i`` residual curves with replacement within
    group ``i`` (whole vector curves, so cross-measure dependence is kept).
    The replicate mean difference is the null analogue of ``delta`` and the
    covariance is re-estimated after centring each bootstrap group at its own
    mean. Replicate ``b`` uses its own stream derived from ``(seed, b)``.

    ``extra["f_int"]`` carries the matching ``F_int`` replicates and
    ``extra["ws_from_replicates"]`` a moment-matched calibration of them.
    """
    if B < 1:
        raise ValidationError("B must be at least 1")
    if B * g.n > work_limit:
        raise ValidationError(f"budget exceeded: B * n = {B * g.n} > {work_limit}")
    n1, n2 = g.n1, g.n2
    r1 = g.y1 - g.y1.mean(axis=0)
    r2 = g.y2 - g.y2.mean(axis=0)
    scale = _data_scale(g.y1, g.y2)
    w = g.grid.weights(rule)

    observed_curve = hotelling_pointwise(g)
    observed = f_max(observed_curve)[0]

    idx1 = np.empty((B, n1), dtype=np.intp)
    idx2 = np.empty((B, n2), dtype=np.intp)
    for b in range(B):
        rng = replicate_rng(seed, b)
        idx1[b] = rng.integers(0, n1, n1)
        idx2[b] = rng.integers(0, n2, n2)

    reps_max = np.empty(B)
    reps_int = np.empty(B)
    for lo in range(0, B, chunk):
        hi = min(B, lo + chunk)
        t = _pointwise_batch(r1[idx1[lo:hi]], r2[idx2[lo:hi]], scale, "inf")
        reps_max[lo:hi] = t.max(axis=-1)
        reps_int[lo:hi] = t @ w
    extra = {"f_int": reps_int, "ws_from_replicates": _moment_match(reps_int)}
    return ResamplingResult(observed, reps_max, _add_one_pvalue(observed, reps_max), seed, extra)


def permutation_test(g: GroupedSample, statistic: str = "f_int", R: int = 1000, seed: int = 0,
                     *, rule: str = "trapezoid", chunk: int = 250) -> ResamplingResult:
    """Relabel sessions at random, keeping group sizes, and recompute the statistic."""
    if statistic not in ("f_int", "f_max"):
        raise ValidationError(f"unknown statistic {statistic!r}")
    if R < 1:
        raise ValidationError("R must be at least 1")
    if g.n < 4:
        raise ValidationError("too few sessions for a permutation test")
    pooled = np.concatenate([g.y1, g.y2])
    n1 = g.n1
    scale = _data_scale(pooled)
    w = g.grid.weights(rule)

    def stat(t):
        return t @ w if statistic == "f_int" else t.max(axis=-1)

    observed = float(stat(hotelling_pointwise(g).t_values))
    perms = np.empty((R, g.n), dtype=np.intp)
    for r in range(R):
        perms[r] = replicate_rng(seed, r).permutation(g.n)
    reps = np.empty(R)
    for lo in range(0, R, chunk):
        hi = min(R, lo + chunk)
        block = pooled[perms[lo:hi]]
        reps[lo:hi] = stat(_pointwise_batch(block[:, :n1], block[:, n1:], scale, "inf"))
    return ResamplingResult(observed, reps, _add_one_pvalue(observed, reps), seed)
