"""Figure rendering for the report paths.

Figures are written next to the delimited output.  The Agg backend is
forced so the CLI works headless; series are decimated for drawing only.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .sim import Trajectory

__all__ = ["save_trajectory_figure", "save_compare_figure", "save_sweep_figure"]

_MAX_POINTS = 20_000


def _thin(*arrays):
    n = arrays[0].size
    step = max(1, n // _MAX_POINTS)
    return [a[::step] for a in arrays]


def save_trajectory_figure(traj: Trajectory, path, predictions=None) -> None:
    """Three panels: |x1| on a log scale (with predicted levels), control
    signal, and the phase portrait."""
    t, x1, x2, u = _thin(traj.times, traj.x1, traj.x2, traj.u)
    fig, axes = plt.subplots(3, 1, figsize=(7, 9))

    ax = axes[0]
    ax.semilogy(t, np.maximum(np.abs(x1), 1e-300), lw=0.8)
    for pred in predictions or []:
        if pred.value > 0:
            ax.axhline(pred.value, color="tab:red", ls="--", lw=0.8,
                       label=f"{pred.kind.value} = {pred.value:.3g}")
    if predictions:
        ax.legend(fontsize=8)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("|x1|")
    ax.grid(True, alpha=0.3)

    ax = axes[1]
    ax.plot(t, u, lw=0.6)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("u")
    ax.grid(True, alpha=0.3)

    ax = axes[2]
    ax.plot(x1, x2, lw=0.6)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.grid(True, alpha=0.3)

    fig.suptitle(f"{traj.scenario.kind.value}: gamma={traj.scenario.params.gamma}, "
                 f"mu={traj.scenario.params.mu}", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_compare_figure(trajs: dict, path, mu: float) -> None:
    """Phase portraits, the zoom into the band |x1| <= mu, and the control
    signals for the compared loops."""
    fig, axes = plt.subplots(3, 1, figsize=(7, 10))
    for name, traj in trajs.items():
        t, x1, x2, u = _thin(traj.times, traj.x1, traj.x2, traj.u)
        label = name + (" (diverged)" if traj.diverged else "")
        axes[0].plot(x1, x2, lw=0.7, label=label)
        axes[1].plot(x1, x2, lw=0.7, label=label)
        axes[2].plot(t, u, lw=0.6, label=label)
    axes[0].set_xlabel("x1")
    axes[0].set_ylabel("x2")
    axes[0].set_title("(a) phase portrait", fontsize=9)
    axes[1].set_xlim(-mu, mu)
    span = [np.abs(tr.x2[np.abs(tr.x1) <= mu]) for tr in trajs.values()
            if np.any(np.abs(tr.x1) <= mu)]
    if span:
        lim = max(float(np.max(s)) for s in span if s.size) or 1.0
        axes[1].set_ylim(-1.05 * lim, 1.05 * lim)
    axes[1].set_xlabel("x1")
    axes[1].set_ylabel("x2")
    axes[1].set_title("(b) band vicinity", fontsize=9)
    axes[2].set_xlabel("t [s]")
    axes[2].set_ylabel("u")
    axes[2].set_title("(c) control signal", fontsize=9)
    for ax in axes:
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figure(rows: list[dict], path) -> None:
    """Predicted-versus-measured scatter for a parameter sweep."""
    pred = np.array([r["predicted"] for r in rows], dtype=float)
    meas = np.array([r["measured"] for r in rows], dtype=float)
    ok = np.isfinite(pred) & np.isfinite(meas) & (pred > 0) & (meas > 0)
    fig, ax = plt.subplots(figsize=(5, 5))
    if np.any(ok):
        lo = 0.5 * min(pred[ok].min(), meas[ok].min())
        hi = 2.0 * max(pred[ok].max(), meas[ok].max())
        ax.loglog([lo, hi], [lo, hi], "k--", lw=0.8, label="measured = predicted")
        ax.loglog(pred[ok], meas[ok], "o", ms=6)
    for r in rows:
        if np.isfinite(r["predicted"]) and np.isfinite(r["measured"]):
            ax.annotate(f'{r["param"]}={r["value"]:g}', (r["predicted"], r["measured"]),
                        fontsize=7, xytext=(4, 4), textcoords="offset points")
    ax.set_xlabel("predicted")
    ax.set_ylabel("measured")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
