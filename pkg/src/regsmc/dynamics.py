"""Closed-loop vector fields for the quasi-continuous controller and its regularizations.

Three second-order closed loops share the plant ``x1' = x2``, ``x2' = u + d``:

* ``original`` -- the discontinuous law ``u = -(gamma*x1 + |x2|*x2) / |x1|``,
  singular on the line ``x1 = 0``.
* ``maxreg``   -- max regularization: the denominator is ``max(mu, |x1|)``,
  locally Lipschitz, identical to ``original`` for ``|x1| >= mu``.
* ``addreg``   -- additive regularization: the denominator is ``|x1| + mu``,
  globally continuous.

All control laws are pure functions of the state and parameters; the
disturbance enters only through :func:`vector_field`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

__all__ = [
    "State",
    "SystemKind",
    "SystemParams",
    "control",
    "control_original",
    "control_maxreg",
    "control_addreg",
    "vector_field",
    "linearized_matrix",
]


class State(NamedTuple):
    """Plant state: position x1 and velocity x2."""

    x1: float
    x2: float


class SystemKind(Enum):
    ORIGINAL = "original"
    MAXREG = "maxreg"
    ADDREG = "addreg"

    @classmethod
    def parse(cls, text: str) -> "SystemKind":
        try:
            return cls(text.strip().lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown system kind {text!r} (expected one of: {names})") from None


@dataclass(frozen=True)
class SystemParams:
    """Controller parameters.

    gamma: control gain, > 0.
    mu: regularization radius, > 0; ignored by the original system.
    dist_bound: optional sup-norm bound D on the disturbance, >= 0.
    """

    gamma: float
    mu: float | None = None
    dist_bound: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError(f"gamma must be finite and > 0, got {self.gamma}")
        if self.mu is not None and not (math.isfinite(self.mu) and self.mu > 0.0):
            raise ValueError(f"mu must be finite and > 0, got {self.mu}")
        if self.dist_bound is not None and not (
            math.isfinite(self.dist_bound) and self.dist_bound >= 0.0
        ):
            raise ValueError(f"dist_bound must be finite and >= 0, got {self.dist_bound}")

    def require_mu(self) -> float:
        if self.mu is None:
            raise ValueError("this system kind requires a regularization radius mu > 0")
        return self.mu


def _check_state(s: State) -> None:
    if not (math.isfinite(s[0]) and math.isfinite(s[1])):
        raise ValueError(f"non-finite state {tuple(s)}")


def control_original(s: State, gamma: float) -> float:
    """Discontinuous control acceleration of the original closed loop.

    On the singular line x1 = 0 the value is the Filippov midpoint
    selection 0 (sign(0) = 0); the velocity damping term is dropped there,
    exactly as in the piecewise definition of the loop.
    """
    _check_state(s)
    x1, x2 = s
    if x1 == 0.0:
        return 0.0
    return -(gamma * x1 + abs(x2) * x2) / abs(x1)


def control_maxreg(s: State, gamma: float, mu: float) -> float:
    """Max-regularized control: gain denominator floored at mu.

    Agrees with :func:`control_original` exactly whenever |x1| >= mu.
    """
    _check_state(s)
    if mu <= 0.0:
        raise ValueError(f"mu must be > 0, got {mu}")
    x1, x2 = s
    return -(gamma * x1 + abs(x2) * x2) / max(mu, abs(x1))


def control_addreg(s: State, gamma: float, mu: float) -> float:
    """Additively regularized control: denominator |x1| + mu, continuous everywhere."""
    _check_state(s)
    if mu <= 0.0:
        raise ValueError(f"mu must be > 0, got {mu}")
    x1, x2 = s
    return -(gamma * x1 + abs(x2) * x2) / (abs(x1) + mu)


def control(kind: SystemKind, s: State, p: SystemParams) -> float:
    """Control acceleration of the selected closed loop."""
    if kind is SystemKind.ORIGINAL:
        return control_original(s, p.gamma)
    if kind is SystemKind.MAXREG:
        return control_maxreg(s, p.gamma, p.require_mu())
    if kind is SystemKind.ADDREG:
        return control_addreg(s, p.gamma, p.require_mu())
    raise ValueError(f"unknown system kind {kind!r}")


def vector_field(kind: SystemKind, s: State, p: SystemParams, d: float = 0.0) -> tuple[float, float]:
    """State derivative (x1', x2') of the closed loop under disturbance d."""
    if not math.isfinite(d):
        raise ValueError(f"non-finite disturbance {d}")
    return (s[1], control(kind, s, p) + d)


def linearized_matrix(p: SystemParams) -> np.ndarray:
    """System matrix of the regularized loop linearized at the origin.

    A harmonic oscillator [[0, 1], [-gamma/mu, 0]] with natural frequency
    sqrt(gamma/mu).
    """
    mu = p.require_mu()
    return np.array([[0.0, 1.0], [-p.gamma / mu, 0.0]])
