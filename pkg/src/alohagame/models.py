"""Domain types, Rayleigh channel sampling, and per-slot capture rules.

All channel gains are unit-mean exponential (Rayleigh fading, |h|^2); transmit
power enters only through the noise-to-signal ratio of the SINR model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "Sinr",
    "Power",
    "CaptureModel",
    "NoCsi",
    "PerfectCsi",
    "QuantizedCsi",
    "CsiMode",
    "NodeSpec",
    "Scenario",
    "SlotOutcome",
    "sample_gains",
    "decide_capture",
    "quantized_level_probs",
    "threshold_to_prob",
]


@dataclass(frozen=True)
class Sinr:
    """SINR capture: a packet is decoded iff its SINR exceeds the capture ratio.

    ``noise_ratio`` is the noise-to-signal power ratio at the receiver.
    """

    b: float
    noise_ratio: float = 0.0

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"capture ratio must be positive, got {self.b}")
        if self.noise_ratio < 0:
            raise ValueError(f"noise_ratio must be >= 0, got {self.noise_ratio}")


@dataclass(frozen=True)
class Power:
    """Power capture: the strongest packet is decoded iff it exceeds every
    other transmitted power by the factor ``1 + delta``.

    ``delta = math.inf`` is the collision model (success iff sole transmitter)
    and is carried exactly, never as a large float.
    """

    delta: float

    def __post_init__(self):
        if not (self.delta >= 0):
            raise ValueError(f"guard zone delta must be >= 0, got {self.delta}")


CaptureModel = Union[Sinr, Power]


@dataclass(frozen=True)
class NoCsi:
    """Node has no channel knowledge: it transmits by a coin flip each slot."""


@dataclass(frozen=True)
class PerfectCsi:
    """Node observes its exact channel gain and uses a threshold strategy."""


@dataclass(frozen=True)
class QuantizedCsi:
    """Node observes which of a finite set of gain ranges it is in.

    ``cutpoints`` are the strictly increasing gain values separating the
    levels (len K-1 for K levels); ``probs`` is the per-level transmission
    probability vector (len K), ordered low CSI to high CSI.
    """

    cutpoints: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "cutpoints", tuple(float(c) for c in self.cutpoints))
        object.__setattr__(self, "probs", tuple(float(s) for s in self.probs))
        if len(self.probs) != len(self.cutpoints) + 1:
            raise ValueError(
                f"need one transmit probability per level: "
                f"{len(self.cutpoints)} cutpoints require {len(self.cutpoints) + 1} "
                f"probs, got {len(self.probs)}"
            )
        if any(not (0 < c < math.inf) for c in self.cutpoints):
            raise ValueError("cutpoints must be positive and finite")
        if any(b <= a for a, b in zip(self.cutpoints, self.cutpoints[1:])):
            raise ValueError("cutpoints must be strictly increasing")
        if any(not (0 <= s <= 1) for s in self.probs):
            raise ValueError("level transmit probabilities must lie in [0,1]")


CsiMode = Union[NoCsi, PerfectCsi, QuantizedCsi]


def quantized_level_probs(cutpoints: Sequence[float]) -> np.ndarray:
    """Occurrence probability of each CSI level under unit-mean exponential gains."""
    edges = np.concatenate(([0.0], np.asarray(cutpoints, dtype=float), [np.inf]))
    surv = np.exp(-edges)
    return surv[:-1] - surv[1:]


def threshold_to_prob(strategy, level_probs: Sequence[float]) -> float:
    """Average transmission probability of a quantized threshold strategy.

    ``strategy`` is the per-level transmit probability vector (or a
    :class:`QuantizedCsi`); it must have the threshold form
    (0, ..., 0, s, 1, ..., 1). ``level_probs`` are the occurrence
    probabilities of the levels (summing to 1, all positive).
    """
    s = tuple(getattr(strategy, "probs", strategy))
    q = np.asarray(level_probs, dtype=float)
    if len(s) != len(q):
        raise ValueError(f"strategy has {len(s)} levels but {len(q)} occurrence probs")
    if np.any(q <= 0):
        raise ValueError("level occurrence probabilities must all be > 0")
    if not math.isclose(float(q.sum()), 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError(f"level occurrence probabilities sum to {q.sum()}, not 1")
    nonzero = [j for j, v in enumerate(s) if v > 0]
    if not nonzero:
        return 0.0
    m = nonzero[0]
    if any(v != 1.0 for v in s[m + 1 :]):
        raise ValueError(f"not a threshold strategy: {s}")
    return float(s[m] * q[m] + q[m + 1 :].sum())


@dataclass(frozen=True)
class NodeSpec:
    """One player: throughput demand, CSI mode, and current strategy.

    For a perfect-CSI node the gain threshold is tied to the average
    transmission probability by tx_prob = exp(-threshold); it is derived
    automatically when not given.
    """

    demand: float
    csi: CsiMode = field(default_factory=NoCsi)
    tx_prob: float = 0.0
    threshold: float | None = None

    def __post_init__(self):
        if not (0 <= self.demand <= 1):
            raise ValueError(f"demand must lie in [0,1], got {self.demand}")
        if not (0 <= self.tx_prob <= 1):
            raise ValueError(f"tx_prob must lie in [0,1], got {self.tx_prob}")
        if isinstance(self.csi, PerfectCsi):
            if self.threshold is None:
                t = -math.log(self.tx_prob) if self.tx_prob > 0 else math.inf
                object.__setattr__(self, "threshold", t)
            elif self.threshold < 0:
                raise ValueError(f"threshold must be >= 0, got {self.threshold}")
            elif abs(self.tx_prob - math.exp(-self.threshold)) > 1e-12:
                raise ValueError(
                    f"threshold {self.threshold} inconsistent with tx_prob "
                    f"{self.tx_prob}: exp(-threshold) = {math.exp(-self.threshold)}"
                )
        elif self.threshold is not None:
            raise ValueError("threshold only applies to perfect-CSI nodes")


@dataclass(frozen=True)
class Scenario:
    """A full game instance for the slot simulator."""

    nodes: tuple[NodeSpec, ...]
    model: CaptureModel
    seed: int = 0
    slots: int = 1_000_000

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(self.nodes) < 1:
            raise ValueError("scenario needs at least one node")
        if self.slots < 1:
            raise ValueError(f"slots must be >= 1, got {self.slots}")
        if not (0 <= self.seed < 2**64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class SlotOutcome:
    """Per-node transmit flags, channel gains, and reception outcome of one slot."""

    transmitted: tuple[bool, ...]
    gains: tuple[float, ...]
    success: tuple[bool, ...]

    def __post_init__(self):
        if not len(self.transmitted) == len(self.gains) == len(self.success):
            raise ValueError("per-node fields must have equal length")
        if any(s and not t for s, t in zip(self.success, self.transmitted)):
            raise ValueError("a node cannot succeed without transmitting")


def sample_gains(n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n independent unit-mean exponential channel gains."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return rng.standard_exponential(n)


def decide_capture(model: CaptureModel, transmitted, gains) -> np.ndarray:
    """Apply the reception rule of ``model`` to one slot.

    SINR: node i succeeds iff it transmitted and
    gains[i] > b * (sum of other transmitted gains + noise_ratio); the
    comparison is kept in product form so a zero denominator needs no
    special case. Power: node i succeeds iff it transmitted and
    gains[i] > (1+delta) * max over other transmitters' gains, with the
    max over an empty set taken as 0 (a lone transmitter always wins);
    delta = inf succeeds iff sole transmitter. Ties lose (strict
    inequalities), which matters only on measure-zero events but keeps
    the rule deterministic.
    """
    tx = np.asarray(transmitted, dtype=bool)
    g = np.asarray(gains, dtype=float)
    if tx.shape != g.shape:
        raise ValueError(f"shape mismatch: transmitted {tx.shape} vs gains {g.shape}")
    tg = np.where(tx, g, 0.0)
    if isinstance(model, Sinr):
        interference = tg.sum() - tg
        return tx & (g > model.b * (interference + model.noise_ratio))
    if math.isinf(model.delta):
        return tx & (tx.sum() == 1)
    success = np.zeros_like(tx)
    for i in np.flatnonzero(tx):
        others = np.delete(tg, i)
        rival = others.max() if others.size else 0.0
        success[i] = g[i] > (1.0 + model.delta) * rival
    return success
