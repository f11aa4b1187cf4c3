"""Lyapunov candidates, gain conditions, and numerical dissipation checks.

Seven scalar candidates cover the three closed loops:

* ``ENERGY``          gain * z(x1) + x2^2/2, where z is the smoothed
                      position integral of the max-regularized loop.
* ``LOG_ENERGY``      log(1 + ENERGY); its rate is bounded by |d|/sqrt(2)
                      for any state, the dissipativity certificate.
* ``OUTSIDE_BAND``    gain*|x1| + x2^2/2 + eps*sqrt(|x1|)*sign(x1)*x2,
                      strict certificate wherever |x1| >= mu.
* ``INNER_QUADRATIC`` (gain/mu)*x1^2/2 + x2^2/2, in-band energy.
* ``INNER_ISS``       in-band ISS certificate built from the quadratic
                      energy, a quartic mixing term and two
                      Young-inequality weights eps1, eps2.
* ``PRACTICAL_ISS``   z-smoothed variant of OUTSIDE_BAND, positive
                      definite globally.
* ``ADDREG_ENERGY``   energy of the additively regularized loop,
                      normalized to vanish at the origin.

All evaluators accept scalars; the ``*_series`` variants broadcast over
numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .dynamics import State, SystemKind, SystemParams

__all__ = [
    "LyapunovKind",
    "CertificateConfig",
    "GainCondition",
    "GainCheck",
    "CheckReport",
    "z_integral",
    "evaluate",
    "evaluate_series",
    "analytic_rate",
    "analytic_rate_series",
    "kappa",
    "select_epsilons",
    "gain_condition",
    "proof_bound_terms",
    "inner_iss_disturbance_gain",
    "inner_iss_rate",
    "check_dissipation",
    "sample_states",
]


class LyapunovKind(Enum):
    ENERGY = "energy"
    LOG_ENERGY = "log_energy"
    OUTSIDE_BAND = "outside_band"
    INNER_QUADRATIC = "inner_quadratic"
    INNER_ISS = "inner_iss"
    PRACTICAL_ISS = "practical_iss"
    ADDREG_ENERGY = "addreg_energy"


_EPS_KINDS = (LyapunovKind.OUTSIDE_BAND, LyapunovKind.PRACTICAL_ISS)
_RATE_KINDS = (
    LyapunovKind.ENERGY,
    LyapunovKind.LOG_ENERGY,
    LyapunovKind.INNER_QUADRATIC,
    LyapunovKind.ADDREG_ENERGY,
)


@dataclass(frozen=True)
class CertificateConfig:
    """Free parameters of the certificates.

    eps: cross-term weight, must lie in (0, sqrt(2*gamma)).
    eps1, eps2: positive Young weights of the in-band ISS certificate.
    kappa_target: decay margin in (0, 1) used when eps1/eps2 are derived.
    """

    eps: float = 1.0 / 3.0
    eps1: float | None = None
    eps2: float | None = None
    kappa_target: float = 0.5

    @classmethod
    def for_kappa(cls, p: SystemParams, target: float = 0.5, eps: float = 1.0 / 3.0):
        e1, e2 = select_epsilons(p, target)
        return cls(eps=eps, eps1=e1, eps2=e2, kappa_target=target)

    def validate_for(self, kind: LyapunovKind, p: SystemParams) -> None:
        if kind in _EPS_KINDS:
            hi = math.sqrt(2.0 * p.gamma)
            if not (0.0 < self.eps < hi):
                raise ValueError(f"eps={self.eps} outside the open interval (0, {hi:.6g})")
        if kind is LyapunovKind.INNER_ISS:
            if self.eps1 is None or self.eps2 is None:
                raise ValueError(
                    "inner ISS certificate needs eps1 and eps2; "
                    "use CertificateConfig.for_kappa(params, target)"
                )
            if self.eps1 <= 0.0 or self.eps2 <= 0.0:
                raise ValueError("eps1 and eps2 must be > 0")
            k = kappa(p, self.eps1, self.eps2)
            if k <= 0.0:
                raise ValueError(f"kappa(eps1, eps2) = {k:.6g} must be > 0")


def z_integral(x1, mu: float):
    """Smoothed position integral: x1^2/(2 mu) inside the band, |x1| - mu/2 outside.

    Continuous with continuous slope at |x1| = mu; bounded above by |x1|.
    """
    if mu <= 0.0:
        raise ValueError(f"mu must be > 0, got {mu}")
    x1 = np.asarray(x1, dtype=float)
    out = np.where(np.abs(x1) < mu, x1 * x1 / (2.0 * mu), np.abs(x1) - mu / 2.0)
    return float(out) if out.ndim == 0 else out


def _inner_iss_terms(x1, x2, p: SystemParams, cfg: CertificateConfig):
    mu = p.require_mu()
    ratio = p.gamma / mu
    quad = 0.5 * ratio * x1 * x1 + 0.5 * x2 * x2
    h = ratio * x1 + x2
    e1_4 = cfg.eps1 ** 4
    e2_4 = cfg.eps2 ** 4
    return mu, ratio, quad, h, e1_4, e2_4


def evaluate_series(kind: LyapunovKind, x1, x2, p: SystemParams,
                    cfg: CertificateConfig | None = None):
    """Evaluate a candidate over arrays of states."""
    cfg = cfg or CertificateConfig()
    cfg.validate_for(kind, p)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if kind is LyapunovKind.ENERGY:
        return p.gamma * z_integral(x1, p.require_mu()) + 0.5 * x2 * x2
    if kind is LyapunovKind.LOG_ENERGY:
        return np.log1p(p.gamma * z_integral(x1, p.require_mu()) + 0.5 * x2 * x2)
    if kind is LyapunovKind.OUTSIDE_BAND:
        return (p.gamma * np.abs(x1) + 0.5 * x2 * x2
                + cfg.eps * np.sqrt(np.abs(x1)) * np.sign(x1) * x2)
    if kind is LyapunovKind.INNER_QUADRATIC:
        return 0.5 * (p.gamma / p.require_mu()) * x1 * x1 + 0.5 * x2 * x2
    if kind is LyapunovKind.INNER_ISS:
        mu, ratio, quad, h, e1_4, e2_4 = _inner_iss_terms(x1, x2, p, cfg)
        return (quad + 0.25 * h ** 4
                + (mu / 3.0) * (ratio + 1.0) * e1_4 * quad ** 1.5
                + (2.0 * math.sqrt(2.0) / 7.0) * e2_4 * quad ** 3.5)
    if kind is LyapunovKind.PRACTICAL_ISS:
        z = z_integral(x1, p.require_mu())
        return p.gamma * z + 0.5 * x2 * x2 + cfg.eps * np.sqrt(z) * np.sign(x1) * x2
    if kind is LyapunovKind.ADDREG_ENERGY:
        mu = p.require_mu()
        return p.gamma * (np.abs(x1) - mu * np.log1p(np.abs(x1) / mu)) + 0.5 * x2 * x2
    raise ValueError(f"unknown Lyapunov kind {kind!r}")


def evaluate(kind: LyapunovKind, s: State, p: SystemParams,
             cfg: CertificateConfig | None = None) -> float:
    """Candidate value at a single state."""
    return float(evaluate_series(kind, s[0], s[1], p, cfg))


def analytic_rate_series(kind: LyapunovKind, x1, x2, d, p: SystemParams,
                         cfg: CertificateConfig | None = None):
    """Closed-form time derivative along the matching closed loop.

    Available for the kinds whose rate has a closed form: ENERGY and
    LOG_ENERGY (max-regularized loop), INNER_QUADRATIC (in-band dynamics),
    ADDREG_ENERGY (additively regularized loop).
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    d = np.asarray(d, dtype=float)
    mu = p.require_mu()
    if kind is LyapunovKind.ENERGY:
        return -np.abs(x2) * x2 * x2 / np.maximum(mu, np.abs(x1)) + x2 * d
    if kind is LyapunovKind.LOG_ENERGY:
        energy = p.gamma * z_integral(x1, mu) + 0.5 * x2 * x2
        rate = -np.abs(x2) * x2 * x2 / np.maximum(mu, np.abs(x1)) + x2 * d
        return rate / (1.0 + energy)
    if kind is LyapunovKind.INNER_QUADRATIC:
        return -np.abs(x2) * x2 * x2 / mu + x2 * d
    if kind is LyapunovKind.ADDREG_ENERGY:
        return -np.abs(x2) * x2 * x2 / (mu + np.abs(x1)) + x2 * d
    raise ValueError(f"no closed-form rate for {kind!r}")


def analytic_rate(kind: LyapunovKind, s: State, p: SystemParams, d: float,
                  cfg: CertificateConfig | None = None) -> float:
    return float(analytic_rate_series(kind, s[0], s[1], d, p, cfg))


def kappa(p: SystemParams, eps1: float, eps2: float) -> float:
    """Decay coefficient of the quartic term in the in-band ISS rate bound."""
    mu = p.require_mu()
    return (1.0
            - (p.gamma / mu + 1.0) * 0.75 / eps1 ** (4.0 / 3.0)
            - (1.0 / mu) * 0.75 / eps2 ** (4.0 / 3.0))


def select_epsilons(p: SystemParams, target_kappa: float) -> tuple[float, float]:
    """Smallest Young weights that hit the target kappa, splitting the
    deficit 1 - kappa equally between the two subtracted terms."""
    if not 0.0 < target_kappa < 1.0:
        raise ValueError(f"target kappa must be in (0, 1), got {target_kappa}")
    mu = p.require_mu()
    deficit = 0.5 * (1.0 - target_kappa)
    eps1 = (0.75 * (p.gamma / mu + 1.0) / deficit) ** 0.75
    eps2 = (0.75 * (1.0 / mu) / deficit) ** 0.75
    return eps1, eps2


class GainCondition(Enum):
    """Which lower bound on the control gain to check.

    REGULARIZED: gain > max(4, 2D + 4*sqrt(2)*D^1.5), the strong
        robustness condition for the max-regularized loop.
    ORIGINAL_TUNABLE: gain > 1/2 + D + 2/(3 eps) * D^1.5, the eps-weighted
        condition for the unregularized loop.
    ORIGINAL_FIXED: the same bound at the admissible choice eps = 1/3,
        i.e. gain > 1/2 + D + 2*D^1.5.
    """

    REGULARIZED = "regularized"
    ORIGINAL_TUNABLE = "original_tunable"
    ORIGINAL_FIXED = "original_fixed"


class GainCheck(NamedTuple):
    passed: bool
    threshold: float


def gain_condition(gamma: float, dist_bound: float, which: GainCondition,
                   eps: float = 1.0 / 3.0) -> GainCheck:
    """Evaluate a gain condition; returns the verdict and the threshold."""
    if dist_bound < 0.0:
        raise ValueError("dist_bound must be >= 0")
    if which is GainCondition.REGULARIZED:
        thr = max(4.0, 2.0 * dist_bound + 4.0 * math.sqrt(2.0) * dist_bound ** 1.5)
    elif which is GainCondition.ORIGINAL_TUNABLE:
        if eps <= 0.0:
            raise ValueError("eps must be > 0")
        thr = 0.5 + dist_bound + 2.0 / (3.0 * eps) * dist_bound ** 1.5
    elif which is GainCondition.ORIGINAL_FIXED:
        thr = 0.5 + dist_bound + 2.0 * dist_bound ** 1.5
    else:
        raise ValueError(f"unknown gain condition {which!r}")
    return GainCheck(gamma > thr, thr)


def proof_bound_terms(x1: float, p: SystemParams, dist_bound: float,
                      eps: float = 1.0 / 3.0) -> tuple[float, float]:
    """Decay and disturbance terms of the practical-certificate rate bound.

    Both are piecewise in |x1| against mu.  The decay term is positive for
    |x1| >= mu whenever gamma > 4; near zero it dips to -sqrt(2 mu).  The
    disturbance term is bounded below by terms of order sqrt(mu).
    """
    if eps <= 0.0:
        raise ValueError("eps must be > 0")
    mu = p.require_mu()
    g = p.gamma
    ax = abs(x1)
    d = dist_bound
    if ax < mu:
        k_val = g * x1 * x1 / (2.0 * mu) ** 1.5 - math.sqrt(2.0 * mu)
        sz = math.sqrt(x1 * x1 / (2.0 * mu))
        e_val = (0.5 * g * ax / mu) * sz - sz * d - (2.0 * math.sqrt(mu) / (3.0 * eps)) * d ** 1.5
    else:
        sz = math.sqrt(ax - mu / 2.0)
        k_val = (g * sz * ax - (ax / sz) ** 3) / (2.0 * ax)
        e_val = sz * (0.5 * g - d - (2.0 * math.sqrt(ax) / (3.0 * eps * sz)) * d ** 1.5)
    return k_val, e_val


def _inner_iss_multiplier(quad, mu, ratio, e1_4, e2_4):
    # chain-rule weight of the quadratic-energy rate inside the certificate
    return (1.0 + 0.5 * mu * (ratio + 1.0) * e1_4 * np.sqrt(quad)
            + math.sqrt(2.0) * e2_4 * quad ** 2.5)


def inner_iss_disturbance_gain(x1, x2, p: SystemParams, cfg: CertificateConfig):
    """Disturbance multiplier b(x) in the in-band ISS rate bound
    rate <= -|x2| x2^2 / mu - kappa h^4 + b(x) d."""
    cfg.validate_for(LyapunovKind.INNER_ISS, p)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    mu, ratio, quad, h, e1_4, e2_4 = _inner_iss_terms(x1, x2, p, cfg)
    out = h ** 3 + _inner_iss_multiplier(quad, mu, ratio, e1_4, e2_4) * x2
    return float(out) if out.ndim == 0 else out


def inner_iss_rate(x1, x2, d, p: SystemParams, cfg: CertificateConfig):
    """Exact time derivative of the in-band ISS certificate along the
    in-band closed loop under disturbance d (chain rule on its terms)."""
    cfg.validate_for(LyapunovKind.INNER_ISS, p)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    d = np.asarray(d, dtype=float)
    mu, ratio, quad, h, e1_4, e2_4 = _inner_iss_terms(x1, x2, p, cfg)
    quad_rate = -np.abs(x2) * x2 * x2 / mu + x2 * d
    h_rate = (ratio + 1.0) * x2 - h - np.abs(x2) * x2 / mu + d
    out = _inner_iss_multiplier(quad, mu, ratio, e1_4, e2_4) * quad_rate + h ** 3 * h_rate
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one named sampled or trajectory inequality check."""

    name: str
    samples: int
    worst_margin: float
    passed: bool

    def __str__(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{self.name}: samples={self.samples} "
                f"worst_margin={self.worst_margin:+.3e} {verdict}")


_PAIRING = {
    LyapunovKind.ENERGY: SystemKind.MAXREG,
    LyapunovKind.LOG_ENERGY: SystemKind.MAXREG,
    LyapunovKind.INNER_QUADRATIC: SystemKind.MAXREG,
    LyapunovKind.ADDREG_ENERGY: SystemKind.ADDREG,
}


def check_dissipation(traj, kind: LyapunovKind, p: SystemParams | None = None,
                      cfg: CertificateConfig | None = None, *, tol: float) -> CheckReport:
    """Verify the per-sample finite-difference rate against the closed-form
    dissipation bound, with tolerance `tol` in rate units.

    ENERGY, INNER_QUADRATIC and ADDREG_ENERGY rates are bounded by x2*d;
    LOG_ENERGY by |d|/sqrt(2).  The trajectory must come from the loop the
    candidate certifies; INNER_QUADRATIC only checks steps that start
    inside the band.
    """
    if kind not in _PAIRING:
        raise ValueError(f"no closed-form dissipation bound for {kind!r}")
    p = p or traj.scenario.params
    expected = _PAIRING[kind]
    if traj.scenario.kind is not expected:
        raise ValueError(
            f"{kind.value} pairs with the {expected.value} loop, "
            f"got a {traj.scenario.kind.value} trajectory"
        )
    v = evaluate_series(kind, traj.x1, traj.x2, p, cfg)
    fd = np.diff(v) / traj.dt
    x2 = traj.x2[:-1]
    d = traj.d[:-1]
    if kind is LyapunovKind.LOG_ENERGY:
        bound = np.abs(d) / math.sqrt(2.0)
    else:
        bound = x2 * d
    margins = fd - bound
    if kind is LyapunovKind.INNER_QUADRATIC:
        mask = np.abs(traj.x1[:-1]) < p.require_mu()
        margins = margins[mask]
    n = margins.size
    worst = float(np.max(margins)) if n else 0.0
    return CheckReport(name=f"dissipation[{kind.value}]", samples=n,
                       worst_margin=worst, passed=worst <= tol)


def sample_states(n: int, seed: int = 0, box: float = 2.0,
                  r_min: float = 1.0e-8, r_max: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic state sample: half uniform on the box, half on a
    log-uniform radial shell reaching down to r_min, so that both branches
    of every piecewise formula are exercised."""
    rng = np.random.default_rng(seed)
    n_box = n // 2
    n_shell = n - n_box
    x1 = rng.uniform(-box, box, n_box)
    x2 = rng.uniform(-box, box, n_box)
    r = 10.0 ** rng.uniform(math.log10(r_min), math.log10(r_max), n_shell)
    th = rng.uniform(0.0, 2.0 * math.pi, n_shell)
    return (np.concatenate([x1, r * np.cos(th)]),
            np.concatenate([x2, r * np.sin(th)]))
