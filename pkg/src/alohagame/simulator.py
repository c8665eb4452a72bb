"""Slot-level Monte Carlo engine for every strategy and capture model.

Gains are drawn for all nodes every slot, transmitter or not, so the gain
stream is identical across strategies with the same seed; that makes
common-random-number comparisons between CSI modes meaningful. Each node
owns its own decision stream, independent of the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .models import (
    CaptureModel,
    NoCsi,
    PerfectCsi,
    Power,
    QuantizedCsi,
    Scenario,
    Sinr,
)

__all__ = ["SimTrace", "ThroughputEstimate", "run", "estimate_throughput"]

CHUNK_SLOTS = 1_000_000


@dataclass(frozen=True)
class SimTrace:
    """Aggregated outcome of one simulated run."""

    slots: int
    transmits: np.ndarray
    successes: np.ndarray
    rho_hat: np.ndarray
    p_hat: np.ndarray
    seed: int


@dataclass(frozen=True)
class ThroughputEstimate:
    """Across-replication mean and standard error of empirical throughput."""

    mean: np.ndarray
    std_error: np.ndarray
    replications: int
    seed: int


def _streams(seed: int, n: int):
    """One counter-based gain stream plus one decision stream per node."""
    children = np.random.SeedSequence(seed).spawn(n + 1)
    gens = [np.random.Generator(np.random.Philox(c)) for c in children]
    return gens[0], gens[1:]


def _transmit_chunk(nodes, gains, node_rngs) -> np.ndarray:
    slots = gains.shape[0]
    tx = np.empty_like(gains, dtype=bool)
    for i, node in enumerate(nodes):
        if isinstance(node.csi, PerfectCsi):
            tx[:, i] = gains[:, i] > node.threshold
        elif isinstance(node.csi, NoCsi):
            tx[:, i] = node_rngs[i].random(slots) < node.tx_prob
        else:
            level = np.searchsorted(node.csi.cutpoints, gains[:, i], side="right")
            prob = np.asarray(node.csi.probs)[level]
            tx[:, i] = node_rngs[i].random(slots) < prob
    return tx


def _capture_chunk(model: CaptureModel, tx: np.ndarray, gains: np.ndarray) -> np.ndarray:
    """Vectorized counterpart of models.decide_capture over a slot block."""
    tg = np.where(tx, gains, 0.0)
    if isinstance(model, Sinr):
        interference = tg.sum(axis=1, keepdims=True) - tg
        return tx & (gains > model.b * (interference + model.noise_ratio))
    if math.isinf(model.delta):
        return tx & (tx.sum(axis=1, keepdims=True) == 1)
    rows = np.arange(tg.shape[0])
    top = tg.argmax(axis=1)
    m1 = tg[rows, top]
    masked = tg.copy()
    masked[rows, top] = 0.0
    m2 = masked.max(axis=1)
    # the argmax column competes against the runner-up, everyone else
    # against the maximum; ties at the top defeat both holders
    rival = np.where(np.arange(tg.shape[1]) == top[:, None], m2[:, None], m1[:, None])
    return tx & (gains > (1.0 + model.delta) * rival)


def run(scenario: Scenario, chunk_slots: int = CHUNK_SLOTS) -> SimTrace:
    """Simulate the scenario slot by slot and accumulate per-node counts."""
    n = len(scenario.nodes)
    gain_rng, node_rngs = _streams(scenario.seed, n)
    transmits = np.zeros(n, dtype=np.int64)
    successes = np.zeros(n, dtype=np.int64)
    remaining = scenario.slots
    while remaining > 0:
        block = min(remaining, chunk_slots)
        gains = gain_rng.standard_exponential((block, n))
        tx = _transmit_chunk(scenario.nodes, gains, node_rngs)
        success = _capture_chunk(scenario.model, tx, gains)
        transmits += tx.sum(axis=0)
        successes += success.sum(axis=0)
        remaining -= block
    return SimTrace(
        slots=scenario.slots,
        transmits=transmits,
        successes=successes,
        rho_hat=successes / scenario.slots,
        p_hat=transmits / scenario.slots,
        seed=scenario.seed,
    )


def estimate_throughput(scenario: Scenario, replications: int) -> ThroughputEstimate:
    """Mean and standard error of rho_hat over independent replications.

    Replication seeds are derived deterministically from the scenario seed.
    With a single replication the standard error is reported as 0.0.
    """
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications}")
    rep_seeds = np.random.SeedSequence(scenario.seed).generate_state(
        replications, dtype=np.uint64
    )
    rhos = np.stack(
        [run(replace(scenario, seed=int(s))).rho_hat for s in rep_seeds]
    )
    if replications == 1:
        se = np.zeros(len(scenario.nodes))
    else:
        se = rhos.std(axis=0, ddof=1) / math.sqrt(replications)
    return ThroughputEstimate(
        mean=rhos.mean(axis=0),
        std_error=se,
        replications=replications,
        seed=scenario.seed,
    )
