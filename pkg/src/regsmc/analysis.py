"""Closed-form response predictors, steady-state extraction, chattering metrics.

The predictors come from the in-band linearization of the max-regularized
loop (a forced harmonic oscillator at natural frequency sqrt(gamma/mu))
and from the fixed points of the regularized vector fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .dynamics import State, SystemKind, SystemParams
from .signals import DisturbanceKind, DisturbanceSpec
from .sim import Trajectory

__all__ = [
    "BoundKind",
    "BoundPrediction",
    "ChatterReport",
    "SteadyStateMetrics",
    "predict_const_bound",
    "predict_resonant_bounds",
    "equilibrium_addreg",
    "forced_oscillation_closed_form",
    "forced_oscillation_series",
    "damped_forced_solution",
    "steady_state_metric",
    "chattering_metrics",
    "applicable_bounds",
]


class BoundKind(Enum):
    CONST_STEADY_STATE = "const_steady_state"
    RESONANT_MAX_X1 = "resonant_max_x1"
    RESONANT_MAX_X2 = "resonant_max_x2"
    ADDREG_EQUILIBRIUM = "addreg_equilibrium"


@dataclass(frozen=True)
class BoundPrediction:
    """A predicted response magnitude together with the inputs it used."""

    kind: BoundKind
    value: float
    gamma: float
    mu: float
    amplitude: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.value) and self.value >= 0.0):
            raise ValueError(f"predicted bound must be finite and >= 0, got {self.value}")


class SteadyStateMetrics(NamedTuple):
    mean_abs_x1: float
    max_abs_x1: float
    max_abs_x2: float


@dataclass(frozen=True)
class ChatterReport:
    """Chatter severity of a control series over a trailing window.

    sign_switches counts strict sign changes between consecutive nonzero
    samples (runs of exact zeros do not switch); total_variation is the
    sum of absolute sample-to-sample control changes.
    """

    sign_switches: int
    total_variation: float
    window: tuple[float, float]


def predict_const_bound(p: SystemParams, dbar: float) -> float:
    """Steady-state |x1| under a constant disturbance dbar: mu*dbar/gamma.

    Valid while the equilibrium stays inside the band, i.e. dbar < gamma.
    """
    mu = p.require_mu()
    if not 0.0 <= dbar < p.gamma:
        raise ValueError(f"constant bound needs 0 <= dbar < gamma, got dbar={dbar}")
    return mu * dbar / p.gamma


def predict_resonant_bounds(p: SystemParams, dtilde: float) -> tuple[float, float]:
    """Self-consistent resonant response estimates (max|x1|, max|x2|).

    max|x2| = sqrt(dtilde*mu) from balancing the excitation against the
    amplitude-dependent damping; max|x1| = dtilde*mu/sqrt(gamma*dtilde).
    """
    mu = p.require_mu()
    if dtilde < 0.0:
        raise ValueError(f"dtilde must be >= 0, got {dtilde}")
    if dtilde == 0.0:
        return 0.0, 0.0
    return dtilde * mu / math.sqrt(p.gamma * dtilde), math.sqrt(dtilde * mu)


def equilibrium_addreg(p: SystemParams, dbar: float) -> float:
    """Unique equilibrium position of the additively regularized loop under
    a constant disturbance: mu*dbar/(gamma - dbar)."""
    mu = p.require_mu()
    if not 0.0 <= dbar < p.gamma:
        raise ValueError(f"equilibrium needs 0 <= dbar < gamma, got dbar={dbar}")
    return mu * dbar / (p.gamma - dbar)


def forced_oscillation_closed_form(p: SystemParams, dbar: float, t: float) -> State:
    """Exact response of the in-band linearization to a constant forcing
    dbar from rest: x1 = (mu/gamma) dbar (1 - cos w0 t)."""
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    mu = p.require_mu()
    w0 = math.sqrt(p.gamma / mu)
    scale = mu * dbar / p.gamma
    return State(scale * (1.0 - math.cos(w0 * t)), scale * w0 * math.sin(w0 * t))


def forced_oscillation_series(p: SystemParams, dbar: float, times: np.ndarray):
    """Vectorized :func:`forced_oscillation_closed_form`."""
    times = np.asarray(times, dtype=float)
    mu = p.require_mu()
    w0 = math.sqrt(p.gamma / mu)
    scale = mu * dbar / p.gamma
    return scale * (1.0 - np.cos(w0 * times)), scale * w0 * np.sin(w0 * times)


def damped_forced_solution(omega0: float, sigma_star: float, dtilde: float, t):
    """Position response of the damped oscillator
    x'' + sigma* x' + omega0^2 x = dtilde*cos(omega0*t) from rest.

    Exact for 0 < sigma* < 2*omega0 (underdamped).  The transient decays
    as exp(-sigma*/2 t), leaving the envelope dtilde/(sigma* omega0).
    """
    if omega0 <= 0.0:
        raise ValueError("omega0 must be > 0")
    if not 0.0 < sigma_star < 2.0 * omega0:
        raise ValueError(f"sigma_star must lie in (0, {2.0 * omega0:.6g}), got {sigma_star}")
    t = np.asarray(t, dtype=float)
    wd = math.sqrt(omega0 * omega0 - 0.25 * sigma_star * sigma_star)
    out = (dtilde / sigma_star) * (
        np.sin(omega0 * t) / omega0
        - np.exp(-0.5 * sigma_star * t) * np.sin(wd * t) / wd
    )
    return float(out) if out.ndim == 0 else out


def _window_slice(traj: Trajectory, window: float) -> np.ndarray:
    mask = traj.final_window(window)
    if not np.any(mask):
        raise ValueError("metric window contains no samples")
    return mask


def steady_state_metric(traj: Trajectory, window: float) -> SteadyStateMetrics:
    """(mean|x1|, max|x1|, max|x2|) over the trailing window seconds."""
    m = _window_slice(traj, window)
    return SteadyStateMetrics(
        float(np.mean(np.abs(traj.x1[m]))),
        float(np.max(np.abs(traj.x1[m]))),
        float(np.max(np.abs(traj.x2[m]))),
    )


def chattering_metrics(traj: Trajectory, window: float) -> ChatterReport:
    """Sign-switch count and total variation of the control over the
    trailing window seconds."""
    m = _window_slice(traj, window)
    u = traj.u[m]
    signs = np.sign(u)
    nz = signs[signs != 0.0]
    switches = int(np.sum(nz[1:] * nz[:-1] < 0.0)) if nz.size > 1 else 0
    tv = float(np.sum(np.abs(np.diff(u)))) if u.size > 1 else 0.0
    t_w = traj.times[m]
    return ChatterReport(switches, tv, (float(t_w[0]), float(t_w[-1])))


def applicable_bounds(kind: SystemKind, p: SystemParams,
                      spec: DisturbanceSpec) -> list[BoundPrediction]:
    """Closed-form predictions that apply to a scenario, if any."""
    out: list[BoundPrediction] = []
    amp = abs(spec.amplitude)
    if kind is SystemKind.MAXREG and spec.kind is DisturbanceKind.CONSTANT and amp < p.gamma:
        out.append(BoundPrediction(BoundKind.CONST_STEADY_STATE,
                                   predict_const_bound(p, amp), p.gamma, p.require_mu(), amp))
    elif kind is SystemKind.MAXREG and spec.kind is DisturbanceKind.RESONANT_HARMONIC:
        bx1, bx2 = predict_resonant_bounds(p, amp)
        out.append(BoundPrediction(BoundKind.RESONANT_MAX_X1, bx1, p.gamma, p.require_mu(), amp))
        out.append(BoundPrediction(BoundKind.RESONANT_MAX_X2, bx2, p.gamma, p.require_mu(), amp))
    elif kind is SystemKind.ADDREG and spec.kind is DisturbanceKind.CONSTANT and amp < p.gamma:
        out.append(BoundPrediction(BoundKind.ADDREG_EQUILIBRIUM,
                                   equilibrium_addreg(p, amp), p.gamma, p.require_mu(), amp))
    return out
