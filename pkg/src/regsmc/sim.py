"""Fixed-step explicit Euler simulation of closed-loop scenarios.

The integrator is the conventional simultaneous explicit Euler step
``x(k+1) = x(k) + dt * f(x(k), t(k))``.  The recorded control series is the
control law alone, without the disturbance.  A divergence guard truncates
the trajectory (with a flag) as soon as a state component leaves
``(-guard, guard)`` or stops being finite.

The hot loop is compiled with numba when available; a pure-Python fallback
performs the identical arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dynamics import State, SystemKind, SystemParams, vector_field
from .signals import DisturbanceSpec, disturbance_series, sample_disturbance, sup_norm

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a normal dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap

__all__ = [
    "Scenario",
    "Trajectory",
    "RegionEvent",
    "DEFAULT_GUARD",
    "step_euler",
    "simulate",
    "batch_run",
    "detect_region_crossings",
]

DEFAULT_GUARD = 1.0e9

_KIND_CODE = {SystemKind.ORIGINAL: 0, SystemKind.MAXREG: 1, SystemKind.ADDREG: 2}


@dataclass(frozen=True)
class Scenario:
    """A complete simulation request."""

    kind: SystemKind
    params: SystemParams
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec.zero)
    x0: State = State(0.0, 0.0)
    dt: float = 1.0e-5
    t_end: float = 20.0
    guard: float = DEFAULT_GUARD

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not (math.isfinite(self.t_end) and self.t_end > self.dt):
            raise ValueError(f"t_end must exceed dt, got {self.t_end}")
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-6 * self.dt:
            raise ValueError(f"t_end={self.t_end} is not an integer multiple of dt={self.dt}")
        if not (math.isfinite(self.x0[0]) and math.isfinite(self.x0[1])):
            raise ValueError(f"non-finite initial state {tuple(self.x0)}")
        if self.guard <= 0.0:
            raise ValueError("guard must be > 0")
        if self.kind in (SystemKind.MAXREG, SystemKind.ADDREG):
            self.params.require_mu()
        bound = self.params.dist_bound
        if bound is not None and sup_norm(self.disturbance) > bound:
            raise ValueError(
                f"disturbance sup-norm {sup_norm(self.disturbance)} exceeds declared bound {bound}"
            )

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled state, control and disturbance series.

    ``u`` is the control law evaluated at each recorded state (without the
    disturbance).  If ``diverged`` is set, the series end at the first
    out-of-guard sample, whose values may be non-finite.
    """

    times: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    u: np.ndarray
    d: np.ndarray
    scenario: Scenario
    diverged: bool = False

    def __post_init__(self) -> None:
        n = self.times.size
        for name in ("x1", "x2", "u", "d"):
            if getattr(self, name).size != n:
                raise ValueError("trajectory series must have equal length")

    @property
    def dt(self) -> float:
        return self.scenario.dt

    @property
    def states(self) -> np.ndarray:
        return np.column_stack([self.x1, self.x2])

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    def final_window(self, window: float) -> np.ndarray:
        """Boolean mask of the trailing `window` seconds of samples."""
        if not (0.0 < window <= self.t_final):
            raise ValueError(f"window must lie in (0, {self.t_final}], got {window}")
        return self.times >= self.t_final - window

    def save_csv(self, path, decimate: int = 1) -> None:
        """Write the `t,x1,x2,u,d` delimited series, optionally decimated."""
        if decimate < 1:
            raise ValueError("decimate must be >= 1")
        cols = np.column_stack([self.times, self.x1, self.x2, self.u, self.d])
        np.savetxt(path, cols[::decimate], delimiter=",", header="t,x1,x2,u,d",
                   comments="", fmt="%.17g")


class RegionEvent(NamedTuple):
    """Sample-resolution crossing of the band boundary |x1| = mu."""

    time: float
    direction: str  # "entering" | "leaving"


@njit(cache=True)
def _euler_loop(kind_code, gamma, mu, x1_0, x2_0, dt, n, d, guard):
    x1 = np.empty(n + 1)
    x2 = np.empty(n + 1)
    u = np.empty(n + 1)
    a = x1_0
    b = x2_0
    x1[0] = a
    x2[0] = b
    for k in range(n + 1):
        if kind_code == 0:
            uk = 0.0 if a == 0.0 else -(gamma * a + abs(b) * b) / abs(a)
        elif kind_code == 1:
            uk = -(gamma * a + abs(b) * b) / max(mu, abs(a))
        else:
            uk = -(gamma * a + abs(b) * b) / (abs(a) + mu)
        u[k] = uk
        if k == n:
            break
        a2 = a + dt * b
        b2 = b + dt * (uk + d[k])
        a = a2
        b = b2
        x1[k + 1] = a
        x2[k + 1] = b
        if not (abs(a) < guard and abs(b) < guard):
            if kind_code == 0:
                u[k + 1] = 0.0 if a == 0.0 else -(gamma * a + abs(b) * b) / abs(a)
            elif kind_code == 1:
                u[k + 1] = -(gamma * a + abs(b) * b) / max(mu, abs(a))
            else:
                u[k + 1] = -(gamma * a + abs(b) * b) / (abs(a) + mu)
            return x1, x2, u, k + 1, True
    return x1, x2, u, n, False


def step_euler(
    kind: SystemKind,
    s: State,
    t: float,
    dt: float,
    spec: DisturbanceSpec,
    p: SystemParams,
) -> State:
    """One explicit Euler step from state s at time t."""
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    d = sample_disturbance(spec, t)
    f1, f2 = vector_field(kind, s, p, d)
    return State(s[0] + dt * f1, s[1] + dt * f2)


def simulate(sc: Scenario) -> Trajectory:
    """Integrate a scenario and record the full trajectory at dt resolution."""
    n = sc.n_steps
    times = sc.times()
    spec = sc.disturbance.resolved(sc.params)
    d = disturbance_series(spec, times)
    mu = sc.params.mu if sc.params.mu is not None else 0.0
    x1, x2, u, n_valid, diverged = _euler_loop(
        _KIND_CODE[sc.kind], sc.params.gamma, mu,
        float(sc.x0[0]), float(sc.x0[1]), sc.dt, n, d, sc.guard,
    )
    end = n_valid + 1
    return Trajectory(
        times=times[:end], x1=x1[:end], x2=x2[:end], u=u[:end], d=d[:end],
        scenario=sc, diverged=diverged,
    )


def batch_run(scenarios: list[Scenario]) -> list[Trajectory]:
    """Simulate scenarios independently, preserving input order."""
    return [simulate(sc) for sc in scenarios]


def detect_region_crossings(traj: Trajectory, mu: float) -> list[RegionEvent]:
    """Sample-resolution crossings of |x1| = mu, alternating in direction.

    An event is stamped with the time of the first sample on the new side.
    """
    if mu <= 0.0:
        raise ValueError(f"mu must be > 0, got {mu}")
    inside = np.abs(traj.x1) < mu
    flips = np.flatnonzero(inside[1:] != inside[:-1])
    return [
        RegionEvent(float(traj.times[k + 1]), "entering" if inside[k + 1] else "leaving")
        for k in flips
    ]
