"""Figure rendering for the CLI report paths (matplotlib, Agg, PNG files)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_decay_figure",
    "save_trajectory_figure",
    "save_sweep_figure",
    "save_bounds_figure",
]

_DPI = 150


def save_decay_figure(report, path: Path) -> None:
    """Norm histories against their fitted envelopes, log-log."""
    env = report.envelopes()
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    labels = (r"$\|u\|_{L^2}$", r"$\|(-\mathcal{L})^{1/2}u\|_{L^2}$", r"$\|\partial_t u\|_{L^2}$")
    for series, envelope, label, color in zip(
        (report.l2_u, report.hdot1_u, report.l2_ut), env, labels, ("C0", "C1", "C2")
    ):
        ax.loglog(report.times, np.maximum(series, 1e-300), color=color, label=label)
        ax.loglog(report.times, envelope, color=color, ls="--", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.set_title("Damped-wave decay vs fitted envelopes")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_trajectory_figure(traj, path: Path) -> None:
    """Mean functional and norms of one solver run."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.plot(traj.times, traj.U0_values, "C0")
    ax1.set_xlabel("t")
    ax1.set_ylabel(r"$U_0(t)$")
    title = "mean functional"
    if traj.blew_up:
        ax1.axvline(traj.T_num, color="C3", ls=":", lw=1)
        title += f" (blow-up at t={traj.T_num:.4g})"
    ax1.set_title(title)
    ax2.semilogy(traj.times, np.maximum(traj.l2_u, 1e-300), label=r"$\|u\|$")
    ax2.semilogy(traj.times, np.maximum(traj.hdot1_u, 1e-300), label=r"$\|(-\mathcal{L})^{1/2}u\|$")
    ax2.semilogy(traj.times, np.maximum(traj.l2_ut, 1e-300), label=r"$\|\partial_t u\|$")
    ax2.set_xlabel("t")
    ax2.set_title("norm histories")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_sweep_figure(result, path: Path) -> None:
    """Lifespan scaling: blow-up times vs data size with the fitted power law."""
    eps = np.array([r.epsilon for r in result.records])
    T = np.array([r.T_num for r in result.records])
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    ax.loglog(eps, T, "o", color="C0", label="measured")
    c = np.exp(np.mean(np.log(T) - result.slope * np.log(eps)))
    grid = np.geomspace(eps.min(), eps.max(), 50)
    ax.loglog(grid, c * grid**result.slope, "C3-", lw=1,
              label=f"fit slope {result.slope:.3f}")
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel(r"$T_{num}$")
    ax.set_title("lifespan scaling")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_bounds_figure(seqs, path: Path, traj=None, jmax: int | None = None) -> None:
    """Lower-bound coefficients; overlaid on a trajectory when one is given."""
    fig, axes = plt.subplots(1, 2 if traj is not None else 1, figsize=(9.0 if traj is not None else 5.0, 3.6))
    ax0 = axes[0] if traj is not None else axes
    js = np.arange(seqs.J + 1)
    ax0.plot(js, seqs.log_C, "C0.-")
    ax0.set_xlabel("j")
    ax0.set_ylabel(r"$\log C_j$")
    ax0.set_title("chain coefficients")
    if traj is not None:
        ax1 = axes[1]
        ax1.plot(traj.times, traj.U0_values, "k-", lw=1.2, label=r"$U_0(t)$")
        top = min(jmax if jmax is not None else 4, seqs.J)
        for j in range(top + 1):
            L_j = seqs.L_partial[min(j, seqs.L_partial.size - 1)]
            mask = traj.times >= L_j
            if not np.any(mask):
                continue
            t = traj.times[mask]
            ax1.plot(t, seqs.C[j] * (t - L_j) ** seqs.gamma[j], ls="--", lw=0.9, label=f"j={j}")
        ax1.set_xlabel("t")
        ax1.set_title("lower bounds")
        ax1.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
