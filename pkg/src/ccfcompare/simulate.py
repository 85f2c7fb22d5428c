"""Synthetic data with known truth.

Two generators are provided: Gaussian-process curve samples with a separable
``cross-measure correlation (x) squared-exponential`` covariance, and
bivariate VAR(1) paths whose cross-correlation is available in closed form.
A JSON scenario turns either into a dataset on disk in the ingest formats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np
from scipy.linalg import solve_discrete_lyapunov

from ._seeding import derive_seed
from .ccf import CcfCurve, LagGrid
from .errors import DegenerateError, ValidationError
from .funcsample import MultiCurveSample
from .ingest import Session, write_manifest, write_session_csv

JITTER = 1e-10


def se_kernel(lags: np.ndarray, length_scale: float, sigma2: float) -> np.ndarray:
    d = lags[:, None] - lags[None, :]
    return sigma2 * np.exp(-0.5 * (d / length_scale) ** 2)


def _equicorrelation(p: int, r: float) -> np.ndarray:
    c = np.full((p, p), float(r))
    np.fill_diagonal(c, 1.0)
    return c


@dataclass(frozen=True)
class GpSpec:
    """Mean curves plus separable covariance ``C (x) K`` on a lag grid.

    ``mean`` is ``p x M``; ``C`` is the ``p x p`` equicorrelation matrix with
    off-diagonal ``cross_measure_corr`` and ``K`` a squared-exponential kernel.
    """

    grid: LagGrid
    mean: np.ndarray
    length_scale: float = 0.25
    sigma2: float = 1.0
    cross_measure_corr: float = 0.0
    measures: tuple[str, ...] = ()
    covariance: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float, ndmin=2)
        if mean.shape[1] != self.grid.M:
            raise ValidationError("mean must be p x M")
        p = mean.shape[0]
        if not self.length_scale > 0 or self.sigma2 < 0 or not -1 < self.cross_measure_corr < 1:
            raise ValidationError("invalid kernel: need length_scale > 0, sigma2 >= 0, |corr| < 1")
        cov = np.kron(_equicorrelation(p, self.cross_measure_corr),
                      se_kernel(self.grid.values, self.length_scale, self.sigma2))
        if np.linalg.eigvalsh(cov)[0] < -1e-10:
            raise ValidationError("invalid kernel: covariance is not positive semidefinite")
        measures = tuple(self.measures) or tuple(f"m{k}" for k in range(p))
        if len(measures) != p:
            raise ValidationError("one measure name per mean row required")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "measures", measures)
        object.__setattr__(self, "covariance", cov)

    @property
    def p(self) -> int:
        return self.mean.shape[0]

    def cholesky(self) -> np.ndarray:
        cov = self.covariance + JITTER * np.eye(self.covariance.shape[0])
        try:
            return np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValidationError("invalid kernel: Cholesky factorisation failed") from None


def gp_draws(spec: GpSpec, n: int, rng: np.random.Generator, chol: np.ndarray | None = None) -> np.ndarray:
    """``n`` curve matrices as an ``(n, p, M)`` array."""
    if spec.sigma2 == 0:
        return np.broadcast_to(spec.mean, (n, *spec.mean.shape)).copy()
    chol = spec.cholesky() if chol is None else chol
    z = rng.standard_normal((n, chol.shape[0]))
    return spec.mean + (z @ chol.T).reshape(n, spec.p, spec.grid.M)


def simulate_gp_sample(spec: GpSpec, n: int, seed: int, prefix: str = "gp") -> list[MultiCurveSample]:
    draws = gp_draws(spec, n, np.random.default_rng(seed))
    return [MultiCurveSample(f"{prefix}{j:04d}", spec.grid, draws[j], spec.measures)
            for j in range(n)]


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(mat)
    return (vec * np.sqrt(np.clip(lam, 0, None))) @ vec.T


@dataclass(frozen=True)
class Var1Spec:
    """``X_t = A X_{t-1} + e_t`` with ``e_t ~ N(0, Sigma)``, path length ``T``."""

    A: np.ndarray
    Sigma: np.ndarray
    T: int = 10000

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        S = np.array(self.Sigma, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or S.shape != A.shape:
            raise ValidationError("A and Sigma must be square matrices of equal size")
        if not np.allclose(S, S.T) or np.linalg.eigvalsh(S)[0] < -1e-12:
            raise ValidationError("Sigma must be symmetric positive semidefinite")
        if self.spectral_radius_of(A) >= 1:
            raise ValidationError("nonstationary: spectral radius of A must be < 1")
        if self.T < 2:
            raise ValidationError("T must be at least 2")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Sigma", S)

    @staticmethod
    def spectral_radius_of(A) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(A))))

    @property
    def spectral_radius(self) -> float:
        return self.spectral_radius_of(self.A)

    def autocovariance(self, lag: int) -> np.ndarray:
        """``Cov(X_{t+lag}, X_t)``; negative lags give the transpose."""
        g0 = solve_discrete_lyapunov(self.A, self.Sigma)
        g = np.linalg.matrix_power(self.A, abs(lag)) @ g0
        return g if lag >= 0 else g.T


def theoretical_var1_ccf(spec: Var1Spec, grid: LagGrid, sample_rate_hz: float = 1.0,
                         i: int = 0, j: int = 1) -> CcfCurve:
    """Population ``corr(X_i(t), X_j(t + l))`` at the grid's sample lags."""
    g0 = solve_discrete_lyapunov(spec.A, spec.Sigma)
    if g0[i, i] <= 0 or g0[j, j] <= 0:
        raise DegenerateError("degenerate series: zero stationary variance")
    rho = np.array([spec.autocovariance(int(l))[j, i] for l in grid.sample_lags(sample_rate_hz)])
    return CcfCurve(grid, rho / math.sqrt(g0[i, i] * g0[j, j]))


def default_burn_in(spec: Var1Spec) -> int:
    return int(math.ceil(10.0 / (1.0 - spec.spectral_radius)))


def simulate_var1_path(spec: Var1Spec, seed: int, burn_in: int | None = None) -> np.ndarray:
    """Stationary path as a ``(T, k)`` array; unpack columns for ``(x, y)``."""
    burn = default_burn_in(spec) if burn_in is None else int(burn_in)
    k = spec.A.shape[0]
    total = spec.T + burn
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((total, k)) @ _psd_sqrt(spec.Sigma).T
    out = np.empty((total, k))
    x = np.zeros(k)
    A = spec.A
    if k == 2:
        a00, a01, a10, a11 = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
        x0 = x1 = 0.0
        e0, e1 = eps[:, 0].tolist(), eps[:, 1].tolist()
        c0, c1 = [0.0] * total, [0.0] * total
        for t in range(total):
            x0, x1 = a00 * x0 + a01 * x1 + e0[t], a10 * x0 + a11 * x1 + e1[t]
            c0[t] = x0
            c1[t] = x1
        out[:, 0], out[:, 1] = c0, c1
    else:
        for t in range(total):
            x = A @ x + eps[t]
            out[t] = x
    return out[burn:]


# ---------------------------------------------------------------- scenarios

_NUM = {"type": "number"}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _NUM}}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["kind", "groups"],
    "properties": {
        "kind": {"enum": ["curves", "paths"]},
        "seed": {"type": "integer"},
        "sample_rate_hz": {"type": "number", "exclusiveMinimum": 0},
        "grid": {
            "type": "object",
            "properties": {"a": _NUM, "b": _NUM, "M": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "measures": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "kernel": {
            "type": "object",
            "properties": {"length_scale": {"type": "number", "exclusiveMinimum": 0},
                           "sigma2": {"type": "number", "minimum": 0}},
            "additionalProperties": False,
        },
        "cross_measure_corr": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
        "groups": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["labels", "n"],
                "properties": {
                    "labels": {"type": "object", "minProperties": 1,
                               "additionalProperties": {"type": "string"}},
                    "n": {"type": "integer", "minimum": 1},
                    "offset": {"type": "array", "items": _NUM},
                    "bumps": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["measure", "center", "width", "height"],
                            "properties": {"measure": {"type": "string"}, "center": _NUM,
                                           "width": {"type": "number", "exclusiveMinimum": 0},
                                           "height": _NUM},
                            "additionalProperties": False,
                        },
                    },
                    "A": _MATRIX,
                    "Sigma": _MATRIX,
                    "T": {"type": "integer", "minimum": 3},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


def load_scenario(path) -> dict:
    """Read and validate a scenario file; schema errors raise ``ValidationError``."""
    with open(path, encoding="utf-8") as fh:
        try:
            scenario = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from None
    validate_scenario(scenario)
    return scenario


def validate_scenario(scenario: dict) -> None:
    try:
        jsonschema.validate(scenario, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"scenario schema error at {loc}: {exc.message}") from None
    if scenario["kind"] == "paths":
        for k, grp in enumerate(scenario["groups"]):
            if "A" not in grp or "Sigma" not in grp:
                raise ValidationError(f"scenario schema error at groups/{k}: paths groups need A and Sigma")


def group_mean_curves(grid: LagGrid, measures, group: dict) -> np.ndarray:
    """Mean matrix of a curves-scenario group: per-measure offset plus Gaussian bumps."""
    h = grid.values
    mean = np.zeros((len(measures), grid.M))
    offset = group.get("offset")
    if offset is not None:
        if len(offset) != len(measures):
            raise ValidationError("offset needs one entry per measure")
        mean += np.asarray(offset, dtype=float)[:, None]
    for bump in group.get("bumps", []):
        if bump["measure"] not in measures:
            raise ValidationError(f"bump refers to unknown measure {bump['measure']!r}")
        k = measures.index(bump["measure"])
        mean[k] += bump["height"] * np.exp(-0.5 * ((h - bump["center"]) / bump["width"]) ** 2)
    return mean


def write_scenario_dataset(scenario: dict, out_dir) -> Path:
    """Materialise a scenario as session (or curve) CSVs plus ``manifest.csv``."""
    validate_scenario(scenario)
    out = Path(out_dir)
    (out / "sessions").mkdir(parents=True, exist_ok=True)
    root = int(scenario.get("seed", 0))
    rate = float(scenario.get("sample_rate_hz", 20.0))
    entries = []
    for gi, grp in enumerate(scenario["groups"]):
        if scenario["kind"] == "curves":
            grid = LagGrid(**scenario.get("grid", {}))
            measures = list(scenario.get("measures", ["velocity", "accel_signed"]))
            kern = scenario.get("kernel", {})
            spec = GpSpec(grid, group_mean_curves(grid, measures, grp),
                          kern.get("length_scale", 0.25), kern.get("sigma2", 1.0),
                          scenario.get("cross_measure_corr", 0.0), tuple(measures))
            draws = gp_draws(spec, grp["n"], np.random.default_rng(derive_seed(root, "group", gi)))
            for j in range(grp["n"]):
                sid = f"g{gi}_s{j:03d}"
                fname = f"sessions/{sid}.csv"
                _write_curves(out / fname, grid, measures, draws[j])
                entries.append((sid, fname, rate, grp["labels"]))
        else:
            # one extra sample: position needs T + 1 points for T velocities
            spec = Var1Spec(grp["A"], grp["Sigma"], grp.get("T", 2000) + 1)
            for j in range(grp["n"]):
                sid = f"g{gi}_s{j:03d}"
                path = simulate_var1_path(spec, derive_seed(root, f"path{gi}", j))
                dopamine = path[:, 0]
                position = np.concatenate([[0.0], np.cumsum(path[:-1, 1]) / rate])
                session = Session(sid, rate, dopamine, position, grp["labels"],
                                  np.arange(position.size) / rate)
                fname = f"sessions/{sid}.csv"
                write_session_csv(out / fname, session)
                entries.append((sid, fname, rate, grp["labels"]))
    manifest = out / "manifest.csv"
    write_manifest(manifest, entries)
    return manifest


def _write_curves(path, grid: LagGrid, measures, curves: np.ndarray) -> None:
    lines = ["lag_seconds," + ",".join(measures)]
    for m, h in enumerate(grid.values):
        lines.append(",".join([repr(float(h)), *(repr(float(v)) for v in curves[:, m])]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
