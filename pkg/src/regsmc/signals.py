"""Bounded disturbance generators with sup-norm accounting.

Every generator is gated by an onset time (zero before onset).  The
resonant harmonic references its phase to the onset, so the excitation
starts at its peak and produces the worst-case resonant build-up.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .dynamics import SystemParams

__all__ = [
    "DisturbanceKind",
    "DisturbanceSpec",
    "sample_disturbance",
    "disturbance_series",
    "resonant_frequency",
    "sup_norm",
    "load_disturbance_csv",
]


class DisturbanceKind(Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    RESONANT_HARMONIC = "resonant"
    TABULATED = "tabulated"


@dataclass(frozen=True, eq=False)
class DisturbanceSpec:
    """One bounded exogenous input d(t).

    amplitude: level of the constant, or peak of the harmonic.
    onset_time: d(t) = 0 for t < onset_time.
    frequency: rad/s, harmonic only; None means "resonant", resolved to
        sqrt(gamma/mu) against system parameters (see :meth:`resolved`).
    table_t, table_v: sample points of a tabulated signal, linearly
        interpolated and clamped to the end values outside the table.
    """

    kind: DisturbanceKind = DisturbanceKind.ZERO
    amplitude: float = 0.0
    onset_time: float = 0.0
    frequency: float | None = None
    table_t: np.ndarray | None = None
    table_v: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.amplitude):
            raise ValueError("disturbance amplitude must be finite")
        if not (math.isfinite(self.onset_time) and self.onset_time >= 0.0):
            raise ValueError(f"onset_time must be >= 0, got {self.onset_time}")
        if self.frequency is not None and not (
            math.isfinite(self.frequency) and self.frequency > 0.0
        ):
            raise ValueError(f"frequency must be > 0, got {self.frequency}")
        if self.kind is DisturbanceKind.TABULATED:
            if self.table_t is None or self.table_v is None:
                raise ValueError("tabulated disturbance requires a table")
            t = np.asarray(self.table_t, dtype=float)
            v = np.asarray(self.table_v, dtype=float)
            if t.ndim != 1 or t.shape != v.shape or t.size == 0:
                raise ValueError("table must be two equal-length 1-d columns")
            if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
                raise ValueError("table values must be finite")
            if np.any(np.diff(t) <= 0.0):
                raise ValueError("table times must be strictly increasing")
            object.__setattr__(self, "table_t", t)
            object.__setattr__(self, "table_v", v)

    # -- constructors ------------------------------------------------

    @classmethod
    def zero(cls) -> "DisturbanceSpec":
        return cls(DisturbanceKind.ZERO)

    @classmethod
    def constant(cls, amplitude: float, onset_time: float = 0.0) -> "DisturbanceSpec":
        return cls(DisturbanceKind.CONSTANT, amplitude=amplitude, onset_time=onset_time)

    @classmethod
    def resonant_harmonic(
        cls, amplitude: float, onset_time: float = 0.0, frequency: float | None = None
    ) -> "DisturbanceSpec":
        return cls(
            DisturbanceKind.RESONANT_HARMONIC,
            amplitude=amplitude,
            onset_time=onset_time,
            frequency=frequency,
        )

    @classmethod
    def tabulated(cls, times, values, onset_time: float = 0.0) -> "DisturbanceSpec":
        return cls(
            DisturbanceKind.TABULATED,
            onset_time=onset_time,
            table_t=np.asarray(times, dtype=float),
            table_v=np.asarray(values, dtype=float),
        )

    def resolved(self, p: SystemParams) -> "DisturbanceSpec":
        """Fill a defaulted harmonic frequency with the resonant one."""
        if self.kind is DisturbanceKind.RESONANT_HARMONIC and self.frequency is None:
            return replace(self, frequency=resonant_frequency(p))
        return self


def resonant_frequency(p: SystemParams) -> float:
    """Natural frequency sqrt(gamma/mu) of the regularized loop's linearization."""
    return math.sqrt(p.gamma / p.require_mu())


def _warn_clamped(spec: DisturbanceSpec) -> None:
    warnings.warn(
        "tabulated disturbance sampled outside its table; clamping to end values",
        RuntimeWarning,
        stacklevel=3,
    )


def sample_disturbance(spec: DisturbanceSpec, t: float) -> float:
    """Disturbance value at time t (seconds, >= 0)."""
    if not (math.isfinite(t) and t >= 0.0):
        raise ValueError(f"sample time must be finite and >= 0, got {t}")
    if t < spec.onset_time or spec.kind is DisturbanceKind.ZERO:
        return 0.0
    if spec.kind is DisturbanceKind.CONSTANT:
        return spec.amplitude
    if spec.kind is DisturbanceKind.RESONANT_HARMONIC:
        if spec.frequency is None:
            raise ValueError("harmonic frequency unresolved; call spec.resolved(params) first")
        return spec.amplitude * math.cos(spec.frequency * (t - spec.onset_time))
    # tabulated
    if t < spec.table_t[0] or t > spec.table_t[-1]:
        _warn_clamped(spec)
    return float(np.interp(t, spec.table_t, spec.table_v))


def disturbance_series(spec: DisturbanceSpec, times: np.ndarray) -> np.ndarray:
    """Vectorized :func:`sample_disturbance` over a time grid."""
    times = np.asarray(times, dtype=float)
    if times.size and (not np.all(np.isfinite(times)) or times.min() < 0.0):
        raise ValueError("sample times must be finite and >= 0")
    active = times >= spec.onset_time
    if spec.kind is DisturbanceKind.ZERO:
        return np.zeros_like(times)
    if spec.kind is DisturbanceKind.CONSTANT:
        return np.where(active, spec.amplitude, 0.0)
    if spec.kind is DisturbanceKind.RESONANT_HARMONIC:
        if spec.frequency is None:
            raise ValueError("harmonic frequency unresolved; call spec.resolved(params) first")
        return np.where(
            active, spec.amplitude * np.cos(spec.frequency * (times - spec.onset_time)), 0.0
        )
    if np.any(active & ((times < spec.table_t[0]) | (times > spec.table_t[-1]))):
        _warn_clamped(spec)
    return np.where(active, np.interp(times, spec.table_t, spec.table_v), 0.0)


def sup_norm(spec: DisturbanceSpec) -> float:
    """Exact sup-norm of the generated signal."""
    if spec.kind is DisturbanceKind.ZERO:
        return 0.0
    if spec.kind is DisturbanceKind.TABULATED:
        return float(np.max(np.abs(spec.table_v)))
    return abs(spec.amplitude)


def load_disturbance_csv(path, onset_time: float = 0.0) -> DisturbanceSpec:
    """Load a tabulated disturbance from a two-column CSV (time, value).

    A single header line is allowed and detected by failing to parse as
    numbers.
    """
    with open(path) as fh:
        first = fh.readline()
    skip = 0
    try:
        [float(tok) for tok in first.replace(",", " ").split()]
    except ValueError:
        skip = 1
    data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    if data.shape[1] < 2:
        raise ValueError(f"{path}: expected two columns (time, value)")
    return DisturbanceSpec.tabulated(data[:, 0], data[:, 1], onset_time=onset_time)
