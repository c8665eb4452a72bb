"""Figure rendering for the report subcommands.

Each renderer writes one PNG next to the delimited output; the data in the
CSV/JSON stays the source of truth.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .models import Power, Sinr

__all__ = ["plot_paradox", "plot_dynamics"]


def _model_label(model) -> str:
    if isinstance(model, Sinr):
        return f"SINR capture, b={model.b:g}, N0/PT={model.noise_ratio:g}"
    return f"power capture, delta={model.delta:g}"


def plot_paradox(report, path: str):
    """Throughput-versus-probability curves with and without CSI."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(report.grid, report.rho_nocsi, label="no CSI", lw=1.6)
    csi_label = "perfect CSI (simulated)" if report.csi_simulated else "perfect CSI"
    ax.plot(report.grid, report.rho_csi, label=csi_label, lw=1.6, ls="--")
    ax.set_xlabel("average transmission probability p")
    ax.set_ylabel("per-node throughput")
    ax.set_title(f"{report.n} homogeneous nodes, {_model_label(report.model)}")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_dynamics(trace, path: str):
    """Per-node probability (and threshold, when present) trajectories."""
    perfect = trace.thresholds is not None
    fig, axes = plt.subplots(
        2 if perfect else 1, 1, figsize=(6.4, 6.4 if perfect else 4.2), sharex=True
    )
    ax_p = axes[0] if perfect else axes
    iters = np.arange(trace.p.shape[0])
    for i in range(trace.p.shape[1]):
        ax_p.plot(iters, trace.p[:, i], lw=1.2, label=f"node {i}")
    ax_p.set_ylabel("transmission probability")
    ax_p.legend()
    ax_p.grid(alpha=0.3)
    if perfect:
        for i in range(trace.p.shape[1]):
            axes[1].plot(iters, trace.thresholds[:, i], lw=1.2, label=f"node {i}")
        axes[1].set_ylabel("threshold T")
        axes[1].set_xlabel("iteration")
        axes[1].grid(alpha=0.3)
    else:
        ax_p.set_xlabel("iteration")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
