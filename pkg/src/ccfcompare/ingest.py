"""Session files, locomotion signals and grouping labels.

A session CSV has the header ``t,dopamine,position`` with one row per sample;
an empty ``position`` cell marks a tracking gap. A manifest CSV lists the
sessions of a dataset::

    session_id,file,sample_rate_hz,region,sex,condition

Extra manifest columns become additional grouping factors. A manifest row may
also point at a precomputed curve file (header ``lag_seconds,<measure>,...``)
instead of a raw session, in which case the curves are used as-is.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ValidationError

SESSION_HEADER = ("t", "dopamine", "position")
MANIFEST_REQUIRED = ("session_id", "file", "sample_rate_hz")
MEASURES = ("velocity", "accel_signed", "accel_abs", "dopamine")
DEFAULT_MEASURES = ("velocity", "accel_signed")


@dataclass(frozen=True)
class Session:
    """One recording: paired dopamine and position samples plus labels."""

    id: str
    sample_rate_hz: float
    dopamine: np.ndarray
    position: np.ndarray
    labels: Mapping[str, str]
    t: np.ndarray | None = None

    def __post_init__(self):
        dop = np.asarray(self.dopamine, dtype=float)
        pos = np.asarray(self.position, dtype=float)
        if dop.ndim != 1 or pos.ndim != 1 or dop.shape != pos.shape:
            raise ValidationError(f"session {self.id}: dopamine and position must have equal length")
        if dop.size < 2:
            raise ValidationError(f"session {self.id}: too short")
        if not self.sample_rate_hz > 0:
            raise ValidationError(f"session {self.id}: sample_rate_hz must be positive")
        if not self.labels:
            raise ValidationError(f"session {self.id}: labels must be non-empty")
        if not np.all(np.isfinite(dop)):
            raise ValidationError(f"session {self.id}: dopamine contains missing values")
        for arr in (dop, pos):
            arr.setflags(write=False)
        object.__setattr__(self, "dopamine", dop)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "labels", dict(self.labels))
        if self.t is not None:
            t = np.asarray(self.t, dtype=float)
            t.setflags(write=False)
            object.__setattr__(self, "t", t)

    @property
    def n_samples(self) -> int:
        return self.dopamine.size

    def window(self, start: float | None = None, stop: float | None = None,
               last: float | None = None) -> "Session":
        """Restrict to ``start <= t < stop`` seconds, or to the final ``last`` seconds.

        Times come from the ``t`` column when present, else from the sample
        index and rate.
        """
        t = self.t if self.t is not None else np.arange(self.n_samples) / self.sample_rate_hz
        keep = np.ones(t.size, dtype=bool)
        if last is not None:
            keep &= t > t[-1] - last
        if start is not None:
            keep &= t >= start
        if stop is not None:
            keep &= t < stop
        if keep.sum() < 2:
            raise ValidationError(f"session {self.id}: window leaves fewer than 2 samples")
        return Session(self.id, self.sample_rate_hz, self.dopamine[keep], self.position[keep],
                       self.labels, t[keep])


@dataclass(frozen=True)
class DerivedSignals:
    velocity: np.ndarray
    accel_signed: np.ndarray
    accel_abs: np.ndarray


def interpolate_position(position) -> np.ndarray:
    """Fill interior gaps (NaN) by linear interpolation between present neighbours."""
    pos = np.asarray(position, dtype=float)
    present = np.isfinite(pos)
    if not present.any():
        raise ValidationError("empty signal")
    if not (present[0] and present[-1]):
        raise ValidationError("unbounded gap: position must be present at both ends")
    if present.all():
        return pos.copy()
    idx = np.arange(pos.size)
    out = pos.copy()
    out[~present] = np.interp(idx[~present], idx[present], pos[present])
    return out


def derive_velocity(position, sample_rate_hz: float) -> np.ndarray:
    """Forward difference ``(pos[t+1] - pos[t]) * rate``, length T-1."""
    pos = np.asarray(position, dtype=float)
    if pos.size < 2:
        raise ValidationError("too short: need at least 2 position samples")
    if not np.all(np.isfinite(pos)):
        raise ValidationError("position has gaps; interpolate first")
    return np.diff(pos) * sample_rate_hz


def derive_acceleration(velocity, sample_rate_hz: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Signed and absolute acceleration from a velocity series, length T-1 each."""
    v = np.asarray(velocity, dtype=float)
    if v.size < 2:
        raise ValidationError("too short: need at least 2 velocity samples")
    signed = np.diff(v) * sample_rate_hz
    return signed, np.abs(signed)


def derive_signals(session: Session) -> DerivedSignals:
    pos = interpolate_position(session.position)
    vel = derive_velocity(pos, session.sample_rate_hz)
    signed, absolute = derive_acceleration(vel, session.sample_rate_hz)
    return DerivedSignals(vel, signed, absolute)


def aligned_series(session: Session, measures) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Dopamine and the requested measures truncated to a common length.

    Derived series lose samples at the tail; everything is cut to the
    shortest requested length so all curves share the same time points.
    """
    unknown = [m for m in measures if m not in MEASURES]
    if unknown:
        raise ValidationError(f"unknown measure(s): {', '.join(unknown)}")
    series = {"dopamine": session.dopamine}
    if any(m != "dopamine" for m in measures):
        sig = derive_signals(session)
        series.update(velocity=sig.velocity, accel_signed=sig.accel_signed,
                      accel_abs=sig.accel_abs)
    length = min(series[m].size for m in measures)
    length = min(length, session.dopamine.size)
    return session.dopamine[:length], {m: series[m][:length] for m in measures}


def _parse_float(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"{where}: unparseable number {text!r}") from None
    if not math.isfinite(value):
        raise ValidationError(f"{where}: non-finite value {text!r}")
    return value


def _read_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not rows:
        raise ValidationError(f"{path}: empty file")
    return [h.strip() for h in rows[0]], rows[1:]


def read_session_csv(path, session_id: str, sample_rate_hz: float,
                     labels: Mapping[str, str]) -> Session:
    """Parse a session file; any malformed row rejects the whole session."""
    path = Path(path)
    header, rows = _read_rows(path)
    if tuple(header) != SESSION_HEADER:
        raise ValidationError(f"{path}: expected header {','.join(SESSION_HEADER)}, got {','.join(header)}")
    t, dop, pos = [], [], []
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ValidationError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        where = f"{path}:{lineno}"
        t.append(_parse_float(row[0], where))
        dop.append(_parse_float(row[1], where))
        pos.append(math.nan if row[2].strip() == "" else _parse_float(row[2], where))
    t = np.array(t)
    if t.size >= 2 and np.any(np.diff(t) <= 0):
        raise ValidationError(f"{path}: time column must be strictly increasing")
    return Session(session_id, sample_rate_hz, np.array(dop), np.array(pos), labels, t)


def write_session_csv(path, session: Session) -> None:
    t = session.t if session.t is not None else np.arange(session.n_samples) / session.sample_rate_hz
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SESSION_HEADER)
        for ti, d, p in zip(t, session.dopamine, session.position):
            w.writerow([repr(float(ti)), repr(float(d)), "" if math.isnan(p) else repr(float(p))])


@dataclass(frozen=True)
class CurveRecord:
    """Precomputed per-measure curves for one session."""

    id: str
    labels: Mapping[str, str]
    lags: np.ndarray
    curves: Mapping[str, np.ndarray]


def read_curve_csv(path, session_id: str, labels: Mapping[str, str]) -> CurveRecord:
    path = Path(path)
    header, rows = _read_rows(path)
    if not header or header[0] != "lag_seconds" or len(header) < 2:
        raise ValidationError(f"{path}: curve file must start with lag_seconds")
    data = []
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValidationError(f"{path}:{lineno}: expected {len(header)} fields")
        data.append([_parse_float(x, f"{path}:{lineno}") for x in row])
    arr = np.array(data, dtype=float).reshape(-1, len(header))
    return CurveRecord(session_id, dict(labels), arr[:, 0],
                       {name: arr[:, k] for k, name in enumerate(header[1:], start=1)})


@dataclass
class Dataset:
    """Sessions of one manifest, raw or precomputed, keyed by session id."""

    records: dict[str, Session | CurveRecord] = field(default_factory=dict)
    factors: tuple[str, ...] = ()

    def labels(self, session_id: str) -> Mapping[str, str]:
        return self.records[session_id].labels

    def __len__(self):
        return len(self.records)


def read_manifest(path) -> Dataset:
    """Load every session listed in a manifest; file paths resolve relative to it."""
    path = Path(path)
    header, rows = _read_rows(path)
    missing = [c for c in MANIFEST_REQUIRED if c not in header]
    if missing:
        raise ValidationError(f"{path}: manifest missing column(s) {', '.join(missing)}")
    factors = tuple(h for h in header if h not in MANIFEST_REQUIRED)
    if not factors:
        raise ValidationError(f"{path}: manifest has no label columns")
    ds = Dataset(factors=factors)
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValidationError(f"{path}:{lineno}: expected {len(header)} fields")
        rec = dict(zip(header, (c.strip() for c in row)))
        sid = rec["session_id"]
        if sid in ds.records:
            raise ValidationError(f"{path}:{lineno}: duplicate session id {sid!r}")
        rate = _parse_float(rec["sample_rate_hz"], f"{path}:{lineno}")
        labels = {f: rec[f] for f in factors}
        target = path.parent / rec["file"]
        if not target.exists():
            raise FileNotFoundError(f"session file not found: {target}")
        with open(target, encoding="utf-8") as fh:
            first = fh.readline().strip()
        if first.startswith("lag_seconds"):
            ds.records[sid] = read_curve_csv(target, sid, labels)
        else:
            ds.records[sid] = read_session_csv(target, sid, rate, labels)
    if not ds.records:
        raise ValidationError(f"{path}: manifest lists no sessions")
    return ds


def write_manifest(path, entries) -> None:
    """Write ``entries``: iterable of ``(session_id, file, rate, labels)``."""
    entries = list(entries)
    factors: list[str] = []
    for _, _, _, labels in entries:
        factors.extend(k for k in labels if k not in factors)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*MANIFEST_REQUIRED, *factors])
        for sid, fname, rate, labels in entries:
            w.writerow([sid, fname, repr(float(rate)), *(labels.get(f, "") for f in factors)])
