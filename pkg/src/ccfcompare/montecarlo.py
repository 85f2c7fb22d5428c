"""Size and power studies for the two global tests on simulated GP data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._seeding import derive_seed
from .funcsample import GroupedSample, pooled_covariance
from .globaltests import (bootstrap_fmax, f_int, hotelling_pointwise, permutation_test,
                          ws_calibrate, ws_pvalue)
from .simulate import GpSpec, gp_draws


@dataclass(frozen=True)
class StudyResult:
    p_int: np.ndarray
    p_max: np.ndarray
    alpha: float

    @property
    def rate_int(self) -> float:
        return float(np.mean(self.p_int < self.alpha))

    @property
    def rate_max(self) -> float:
        return float(np.mean(self.p_max < self.alpha))


def draw_grouped(spec1: GpSpec, spec2: GpSpec, n1: int, n2: int, seed: int,
                 chol=None) -> GroupedSample:
    """One two-group dataset; ``chol`` may be shared when both specs have the same kernel."""
    rng = np.random.default_rng(seed)
    y1 = gp_draws(spec1, n1, rng, chol)
    y2 = gp_draws(spec2, n2, rng, chol)
    return GroupedSample(y1, y2, spec1.grid, spec1.measures)


def rejection_study(spec1: GpSpec, spec2: GpSpec, n1: int, n2: int, reps: int, B: int = 300,
                    alpha: float = 0.05, seed: int = 0, rule: str = "trapezoid") -> StudyResult:
    """WS p-values for ``F_int`` and bootstrap p-values for ``F_max`` over ``reps`` datasets."""
    if not np.array_equal(spec1.covariance, spec2.covariance):
        raise ValueError("both groups must share one covariance")
    chol = spec1.cholesky() if spec1.sigma2 > 0 else None
    p_int = np.empty(reps)
    p_max = np.empty(reps)
    for k in range(reps):
        g = draw_grouped(spec1, spec2, n1, n2, derive_seed(seed, "dataset", k), chol)
        cov = pooled_covariance(g)
        pw = hotelling_pointwise(g, cov)
        p_int[k] = ws_pvalue(f_int(pw, rule), ws_calibrate(cov, g.grid, rule))
        p_max[k] = bootstrap_fmax(g, B, derive_seed(seed, "bootstrap", k), rule=rule).p_value
    return StudyResult(p_int, p_max, alpha)


def ws_vs_permutation(g: GroupedSample, R: int = 2000, seed: int = 0,
                      rule: str = "trapezoid") -> tuple[float, float]:
    """``(WS p-value, permutation p-value)`` for ``F_int`` on one dataset."""
    cov = pooled_covariance(g)
    ws = ws_pvalue(f_int(hotelling_pointwise(g, cov), rule), ws_calibrate(cov, g.grid, rule))
    return ws, permutation_test(g, "f_int", R, seed, rule=rule).p_value
