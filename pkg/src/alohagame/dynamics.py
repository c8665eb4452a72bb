"""Distributed probability-update algorithm and its convergence traces.

Each node nudges its transmission probability toward the value that would
have met its demand at the throughput it has observed so far:

    p_i(m+1) = p_i(m) + eps(m) * [min(1, rho_i / rho_hat_i(m) * p_i(m)) - p_i(m)]

The throughput estimate comes either from the slot simulator (cumulative
success counts over elapsed slots) or from the analytic formulas, the
latter giving a deterministic reference trajectory.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .analytic import Regime, throughput
from .models import NodeSpec, PerfectCsi, Scenario
from .simulator import _capture_chunk, _streams, _transmit_chunk
from .solver import NonConvergence

__all__ = [
    "AnalyticOracle",
    "EmpiricalEstimator",
    "DynamicsTrace",
    "harmonic_eps",
    "update_step",
    "run_dynamics",
]


@dataclass(frozen=True)
class AnalyticOracle:
    """Estimator that reports the exact analytic throughput at the current p."""


@dataclass(frozen=True)
class EmpiricalEstimator:
    """Estimator fed by the slot simulator.

    ``slots_per_update`` slots elapse between consecutive updates; counts
    accumulate from slot 0 unless ``window`` limits the estimate to the most
    recent updates (off by default).
    """

    seed: int = 0
    slots_per_update: int = 100
    window: int | None = None

    def __post_init__(self):
        if self.slots_per_update < 1:
            raise ValueError("slots_per_update must be >= 1")
        if self.window is not None and self.window < 1:
            raise ValueError("window must be >= 1 when given")


@dataclass(frozen=True)
class DynamicsTrace:
    """Per-iteration history of one dynamics run.

    ``p`` has shape (iterations+1, n) including the initial point;
    ``thresholds`` mirrors it for perfect-CSI regimes and is None otherwise.
    ``rho_hat``, ``eps`` and ``saturated`` (the rho_hat = 0 guard flag) have
    one row per update. ``final_residual`` is the analytic throughput
    residual at the endpoint.
    """

    p: np.ndarray
    thresholds: np.ndarray | None
    rho_hat: np.ndarray
    eps: np.ndarray
    saturated: np.ndarray
    converged: bool
    final_residual: float
    seed: int | None = None


def harmonic_eps(m: int) -> float:
    """The paper's default step size schedule 1/(1+m)."""
    return 1.0 / (1.0 + m)


def _resolve_eps(eps):
    if callable(eps):
        return eps
    if eps == "harmonic":
        return harmonic_eps
    step = float(eps)
    if not step > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return lambda m: step


def update_step(p, rho_hat, demands, eps: float) -> np.ndarray:
    """One synchronous application of the update rule.

    A vanished throughput estimate saturates the min term at 1, so a node
    that has never succeeded ramps straight up instead of dividing by zero.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    p = np.asarray(p, dtype=float)
    rho_hat = np.asarray(rho_hat, dtype=float)
    rho = np.asarray(demands, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rho_hat > 0, rho / np.where(rho_hat > 0, rho_hat, 1.0), np.inf)
    target = np.minimum(1.0, ratio * p)
    target = np.where(rho_hat > 0, target, 1.0)
    return p + eps * (target - p)


def _nodes_at(p: np.ndarray, regime: Regime) -> tuple[NodeSpec, ...]:
    return tuple(NodeSpec(demand=0.0, csi=regime.csi, tx_prob=float(q)) for q in p)


def run_dynamics(
    demands,
    regime: Regime,
    estimator: AnalyticOracle | EmpiricalEstimator = AnalyticOracle(),
    eps="harmonic",
    max_iter: int = 1_000_000,
    p_tol: float = 1e-6,
    synchronous: bool = True,
) -> DynamicsTrace:
    """Iterate the update rule from p(0) = demands.

    With the analytic estimator the run stops once the undamped fixed-point
    gap max_i |min(1, rho_i/rho_hat_i * p_i) - p_i| drops below ``p_tol``
    (the damped per-step change shrinks with eps(m) and would report
    convergence long before the residual settles), and raises
    :class:`NonConvergence` at the cap. With the empirical estimator the
    trace simply runs to ``max_iter``, matching how the realizations are
    plotted. ``synchronous=False`` updates one node per iteration in
    round-robin order.
    """
    rho = np.asarray(demands, dtype=float)
    if np.any(rho <= 0) or np.any(rho > 1):
        raise ValueError(f"demands must lie in (0,1], got {rho}")
    eps_of = _resolve_eps(eps)
    empirical = isinstance(estimator, EmpiricalEstimator)
    n = rho.size
    perfect = isinstance(regime.csi, PerfectCsi)

    if empirical:
        gain_rng, node_rngs = _streams(estimator.seed, n)
        recent: deque[tuple[np.ndarray, int]] = deque(
            maxlen=estimator.window if estimator.window else None
        )
        total_success = np.zeros(n)
        total_slots = 0

    p = rho.copy()
    p_hist = [p.copy()]
    rho_hist, eps_hist, sat_hist = [], [], []
    converged = False
    for m in range(max_iter):
        if empirical:
            gains = gain_rng.standard_exponential((estimator.slots_per_update, n))
            tx = _transmit_chunk(_nodes_at(p, regime), gains, node_rngs)
            succ = _capture_chunk(regime.model, tx, gains).sum(axis=0)
            if estimator.window:
                recent.append((succ, estimator.slots_per_update))
                rho_hat = sum(s for s, _ in recent) / sum(k for _, k in recent)
            else:
                total_success += succ
                total_slots += estimator.slots_per_update
                rho_hat = total_success / total_slots
        else:
            rho_hat = throughput(p, regime)
        step = eps_of(m)
        if synchronous:
            p_next = update_step(p, rho_hat, rho, step)
        else:
            i = m % n
            p_next = p.copy()
            p_next[i] = update_step(p, rho_hat, rho, step)[i]
        rho_hist.append(np.asarray(rho_hat, dtype=float))
        eps_hist.append(step)
        sat_hist.append(np.asarray(rho_hat) <= 0)
        p_hist.append(p_next.copy())
        gap = np.max(np.abs(update_step(p, rho_hat, rho, 1.0) - p))
        p = p_next
        if not empirical and gap < p_tol:
            converged = True
            break
    if not empirical and not converged:
        raise NonConvergence(float(np.max(np.abs(throughput(p, regime) - rho))), max_iter)
    if empirical:
        converged = True  # trace exhausted; endpoint quality is in final_residual
    p_arr = np.array(p_hist)
    return DynamicsTrace(
        p=p_arr,
        thresholds=-np.log(p_arr) if perfect else None,
        rho_hat=np.array(rho_hist),
        eps=np.array(eps_hist),
        saturated=np.array(sat_hist),
        converged=converged,
        final_residual=float(np.max(np.abs(throughput(p, regime) - rho))),
        seed=estimator.seed if empirical else None,
    )
