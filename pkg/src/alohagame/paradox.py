"""CSI-versus-no-CSI comparisons at equal average transmission probability.

A Braess-like paradox is present when giving every node perfect channel
knowledge does not increase (and typically decreases) the throughput
achievable at the same average transmission probability.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .analytic import (
    power_csi_homog,
    power_nocsi_homog,
    sinr_csi_homog,
    sinr_csi_throughput,
    sinr_nocsi_homog,
    sinr_nocsi_throughput,
)
from .models import CaptureModel, NodeSpec, NoCsi, PerfectCsi, Power, Scenario, Sinr
from .simulator import run

__all__ = [
    "NodeGap",
    "ParadoxReport",
    "default_grid",
    "compare_homogeneous",
    "verify_theorem2",
    "verify_theorem4",
    "heterogeneous_case_compare",
]

CLOSED_FORM_TOL = 1e-12


@dataclass(frozen=True)
class NodeGap:
    node: int
    tx_prob: float
    rho_nocsi: float
    rho_csi: float
    gap: float


@dataclass(frozen=True)
class ParadoxReport:
    """No-CSI and perfect-CSI throughput over a probability grid.

    ``gap`` is rho_nocsi - rho_csi; the paradox is present when the gap is
    nonnegative everywhere (up to ``tolerance``). ``csi_simulated`` marks
    grids where the CSI curve came from the slot simulator because no closed
    form covers the regime; ``per_node`` carries the heterogeneous table
    when the comparison was made at a single probability vector.
    """

    model: CaptureModel
    n: int
    grid: np.ndarray
    rho_nocsi: np.ndarray
    rho_csi: np.ndarray
    gap: np.ndarray
    paradox_present: bool
    tolerance: float
    csi_simulated: bool = False
    per_node: tuple[NodeGap, ...] | None = None


def default_grid(count: int = 1001) -> np.ndarray:
    """Uniform probability grid including both endpoints."""
    return np.linspace(0.0, 1.0, count)


def _simulated_homog_csi(model, n, grid, slots, seed):
    """Average per-node empirical throughput of threshold strategies."""
    values = np.empty(len(grid))
    ses = np.empty(len(grid))
    for k, q in enumerate(grid):
        if q == 0.0:
            values[k] = 0.0
            ses[k] = 0.0
            continue
        nodes = tuple(NodeSpec(0.0, PerfectCsi(), float(q)) for _ in range(n))
        trace = run(Scenario(nodes, model, seed=seed + k, slots=slots))
        values[k] = trace.rho_hat.mean()
        ses[k] = math.sqrt(max(values[k] * (1 - values[k]), 1e-12) / (slots * n))
    return values, ses


def compare_homogeneous(
    model: CaptureModel,
    n: int,
    grid=None,
    slots: int = 1_000_000,
    seed: int = 0,
) -> ParadoxReport:
    """Homogeneous no-CSI and perfect-CSI throughput curves over ``grid``.

    The SINR perfect-CSI closed form needs b >= 1; below that the curve is
    simulated (flagged, with a 4-sigma comparison tolerance).
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    simulated = False
    tol = CLOSED_FORM_TOL
    if isinstance(model, Sinr):
        nocsi = np.array([sinr_nocsi_homog(q, n, model.b, model.noise_ratio) for q in grid])
        if model.b >= 1:
            csi = np.array(
                [sinr_csi_homog(q, n, model.b, model.noise_ratio) for q in grid]
            )
        else:
            simulated = True
            csi, ses = _simulated_homog_csi(model, n, grid, slots, seed)
            tol = float(4.0 * ses.max())
    else:
        nocsi = np.array([power_nocsi_homog(q, n, model.delta) for q in grid])
        csi = np.array([power_csi_homog(q, n, model.delta) for q in grid])
    gap = nocsi - csi
    return ParadoxReport(
        model=model,
        n=n,
        grid=grid,
        rho_nocsi=nocsi,
        rho_csi=csi,
        gap=gap,
        paradox_present=bool(np.all(gap >= -tol)),
        tolerance=tol,
        csi_simulated=simulated,
    )


def verify_theorem2(b: float, n: int, grid=None) -> bool:
    """Check p(1 - bp/(b+1))^{n-1} + (1-p)^n >= ((1-p) + p^{b+1}/(b+1))^{n-1}
    over the grid (the paradox inequality in the zero-noise limit; it is a
    theorem for b > 1 and fails below that)."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    lhs = grid * (1.0 - b * grid / (b + 1.0)) ** (n - 1) + (1.0 - grid) ** n
    rhs = ((1.0 - grid) + grid ** (b + 1.0) / (b + 1.0)) ** (n - 1)
    return bool(np.all(lhs >= rhs - CLOSED_FORM_TOL))


def verify_theorem4(n: int, delta: float, grid=None) -> bool:
    """Check the power-capture paradox: perfect-CSI homogeneous throughput
    never exceeds the no-CSI one on the grid."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    csi = np.array([power_csi_homog(q, n, delta) for q in grid])
    nocsi = np.array([power_nocsi_homog(q, n, delta) for q in grid])
    return bool(np.all(csi <= nocsi + CLOSED_FORM_TOL))


def heterogeneous_case_compare(
    p,
    b: float,
    noise_ratio: float,
    slots: int = 10_000_000,
    seed: int = 0,
) -> ParadoxReport:
    """Per-node no-CSI versus perfect-CSI throughput at one probability vector.

    Falls back to the slot simulator (with a warning and the flag set) when
    the perfect-CSI closed form's validity condition fails at ``p``.
    """
    p = np.asarray(p, dtype=float)
    model = Sinr(b, noise_ratio)
    nocsi = sinr_nocsi_throughput(p, b, noise_ratio)
    csi, valid = sinr_csi_throughput(p, b, noise_ratio)
    simulated = False
    tol = CLOSED_FORM_TOL
    if not valid:
        warnings.warn(
            "perfect-CSI closed form invalid at this p; using the slot simulator",
            stacklevel=2,
        )
        simulated = True
        nodes = tuple(NodeSpec(0.0, PerfectCsi(), float(q)) for q in p)
        trace = run(Scenario(nodes, model, seed=seed, slots=slots))
        csi = trace.rho_hat
        tol = float(4.0 * np.max(np.sqrt(np.maximum(csi * (1 - csi), 1e-12) / slots)))
    gap = nocsi - csi
    table = tuple(
        NodeGap(i, float(p[i]), float(nocsi[i]), float(csi[i]), float(gap[i]))
        for i in range(p.size)
    )
    return ParadoxReport(
        model=model,
        n=p.size,
        grid=p,
        rho_nocsi=nocsi,
        rho_csi=csi,
        gap=gap,
        paradox_present=bool(np.all(gap >= -tol)),
        tolerance=tol,
        csi_simulated=simulated,
        per_node=table,
    )
