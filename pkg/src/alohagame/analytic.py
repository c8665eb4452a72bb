"""Closed-form and quadrature-based average throughput for every regime.

A regime is a capture model (SINR or power) paired with a CSI assumption
(none or perfect). Heterogeneous probability vectors and their homogeneous
specializations are both covered; the power/perfect-CSI heterogeneous case
has no closed form and is evaluated by piecewise adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.integrate import quad

from .models import CaptureModel, NoCsi, PerfectCsi, Power, Sinr

__all__ = [
    "Regime",
    "QuadratureError",
    "sinr_nocsi_throughput",
    "sinr_nocsi_homog",
    "sinr_csi_throughput",
    "sinr_csi_homog",
    "condition11_satisfied",
    "power_nocsi_throughput",
    "power_nocsi_homog",
    "power_csi_throughput",
    "power_csi_homog",
    "power_integral_identity",
    "throughput",
    "homog_throughput",
]

# heterogeneous power formulas alternate elementary symmetric terms and are
# only trusted up to this many nodes
MAX_POWER_NODES = 64


class QuadratureError(RuntimeError):
    """Quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class Regime:
    """Capture model plus CSI assumption; quantized CSI is simulator-only."""

    model: CaptureModel
    csi: Union[NoCsi, PerfectCsi] = field(default_factory=NoCsi)

    def __post_init__(self):
        if not isinstance(self.csi, (NoCsi, PerfectCsi)):
            raise TypeError(f"analytic regimes need NoCsi or PerfectCsi, got {self.csi}")


def _validate_probs(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("p must be a non-empty 1-D probability vector")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError(f"probabilities must lie in [0,1], got {p}")
    return p


def _esp(values: np.ndarray) -> np.ndarray:
    """Elementary symmetric polynomials e_0..e_m of ``values``.

    Newton-style O(m^2) recurrence; every update is an add of nonnegative
    terms for nonnegative inputs, so there is no cancellation here.
    """
    e = np.zeros(len(values) + 1)
    e[0] = 1.0
    for i, v in enumerate(values):
        e[1 : i + 2] = e[1 : i + 2] + v * e[0 : i + 1]
    return e


def _capture_coef(k: int, delta: float) -> float:
    # (1+D)/(k+1+D), with the collision limit D=inf giving 1
    if math.isinf(delta):
        return 1.0
    return (1.0 + delta) / (k + 1.0 + delta)


def sinr_nocsi_throughput(p, b: float, noise_ratio: float) -> np.ndarray:
    """Per-node throughput under SINR capture with no CSI.

    r_i = exp(-b*noise_ratio) * p_i * prod_{j != i} (1 - b*p_j/(1+b)).
    """
    p = _validate_probs(p)
    factors = 1.0 - b * p / (1.0 + b)
    out = np.empty_like(p)
    for i in range(p.size):
        out[i] = p[i] * np.prod(np.delete(factors, i))
    return math.exp(-b * noise_ratio) * out


def sinr_nocsi_homog(p: float, n: int, b: float, noise_ratio: float) -> float:
    """Homogeneous specialization of :func:`sinr_nocsi_throughput`."""
    return math.exp(-b * noise_ratio) * p * (1.0 - b * p / (1.0 + b)) ** (n - 1)


def condition11_satisfied(p, b: float, noise_ratio: float) -> bool:
    """Whether every active node's threshold is dominated by the scaled sum
    of the other active thresholds plus noise, the regime in which the
    perfect-CSI SINR closed form is a faithful simplification."""
    p = _validate_probs(p)
    active = p > 0
    if active.sum() <= 1:
        return True
    t = -np.log(p[active])
    return bool(np.all(b * (t.sum() - t + noise_ratio) >= t))


def sinr_csi_throughput(p, b: float, noise_ratio: float) -> tuple[np.ndarray, bool]:
    """Per-node throughput under SINR capture with perfect CSI, plus the
    validity flag of :func:`condition11_satisfied`.

    r_i = exp(-b*nr) * prod_{j != i} (p_j^{b+1}/(b+1) + 1 - p_j)
          + prod_{j != i} (1 - p_j) * min(p_i - exp(-b*nr), 0).

    Nodes with p_j = 0 never transmit and drop out of both products.
    """
    p = _validate_probs(p)
    beta = math.exp(-b * noise_ratio)
    a = p ** (b + 1.0) / (b + 1.0) + (1.0 - p)
    q = 1.0 - p
    out = np.zeros_like(p)
    for i in range(p.size):
        if p[i] == 0.0:
            continue  # never transmits; absent from the game
        out[i] = beta * np.prod(np.delete(a, i)) + np.prod(np.delete(q, i)) * min(
            p[i] - beta, 0.0
        )
    return out, condition11_satisfied(p, b, noise_ratio)


def sinr_csi_homog(p: float, n: int, b: float, noise_ratio: float) -> float:
    """Homogeneous perfect-CSI SINR throughput, valid for b >= 1.

    rho = [(1-p) + p^{b+1}/(b+1)]^{n-1} exp(-b*nr)
          + (1-p)^{n-1} min(p - exp(-b*nr), 0).
    """
    if b < 1:
        raise ValueError(f"closed form requires b >= 1, got b={b}")
    beta = math.exp(-b * noise_ratio)
    return ((1.0 - p) + p ** (b + 1.0) / (b + 1.0)) ** (n - 1) * beta + (1.0 - p) ** (
        n - 1
    ) * min(p - beta, 0.0)


def power_nocsi_throughput(p, delta: float) -> np.ndarray:
    """Per-node throughput under power capture with no CSI.

    r_i = p_i * sum_k (-1)^k (1+delta)/(k+1+delta) e_k(p_{-i}), with e_k the
    elementary symmetric polynomials of the other nodes' probabilities.
    """
    p = _validate_probs(p)
    n = p.size
    if n > MAX_POWER_NODES:
        raise ValueError(f"heterogeneous power formula capped at n={MAX_POWER_NODES}")
    coefs = np.array([_capture_coef(k, delta) for k in range(n)])
    signs = (-1.0) ** np.arange(n)
    out = np.empty_like(p)
    for i in range(n):
        e = _esp(np.delete(p, i))
        out[i] = p[i] * float(np.sum(signs[: n] * coefs[: n] * e))
    return out


def power_nocsi_homog(p: float, n: int, delta: float) -> float:
    """Homogeneous power-capture throughput with no CSI.

    rho = sum_k (-1)^k C(n-1,k) (1+delta)/(k+1+delta) p^{k+1}.
    """
    if math.isinf(delta):
        return p * (1.0 - p) ** (n - 1)
    return sum(
        (-1.0) ** k * math.comb(n - 1, k) * _capture_coef(k, delta) * p ** (k + 1)
        for k in range(n)
    )


def power_csi_homog(p: float, n: int, delta: float) -> float:
    """Homogeneous power-capture throughput with perfect CSI.

    rho' = p(1-p)^{n-1}(1 - p^delta)
           + sum_k (-1)^k C(n-1,k) (1+delta)/(k+1+delta) p^{k+1+delta}.
    """
    if math.isinf(delta):
        # p^delta -> 0 below p=1 and the remaining term is the collision
        # throughput, which is also the p=1 limit
        return p * (1.0 - p) ** (n - 1)
    return p * (1.0 - p) ** (n - 1) * (1.0 - p**delta) + sum(
        (-1.0) ** k * math.comb(n - 1, k) * _capture_coef(k, delta) * p ** (k + 1 + delta)
        for k in range(n)
    )


def power_csi_throughput(p, delta: float, tol: float = 1e-10) -> np.ndarray:
    """Per-node throughput under power capture with perfect CSI.

    r_i = int_{T_i}^inf prod_{j != i} max(1-p_j, 1-exp(-x/(1+delta))) e^{-x} dx
    with T_i = -ln p_i. Evaluated piecewise between the kink points
    x = (1+delta) T_j by adaptive Gauss-Kronrod quadrature, with the tail
    truncated where e^{-x} drops below machine-negligible mass.
    """
    p = _validate_probs(p)
    if math.isinf(delta):
        raise ValueError("power_csi_throughput requires finite delta")
    n = p.size
    if n > MAX_POWER_NODES:
        raise ValueError(f"heterogeneous power formula capped at n={MAX_POWER_NODES}")
    active = np.flatnonzero(p > 0)
    out = np.zeros(n)
    scale = 1.0 + delta
    thresholds = np.full(n, np.inf)
    thresholds[active] = -np.log(p[active])
    x_top = -math.log(1e-18)  # tail mass below 1e-18 is dropped
    for i in active:
        others = [j for j in active if j != i]
        q = 1.0 - p[others]

        def integrand(x):
            return float(np.prod(np.maximum(q, 1.0 - math.exp(-x / scale))) * math.exp(-x))

        lo = thresholds[i]
        kinks = sorted(
            {scale * thresholds[j] for j in others if lo < scale * thresholds[j] < x_top}
        )
        edges = [lo, *kinks, max(x_top, lo)]
        total, err_total = 0.0, 0.0
        for a, bnd in zip(edges, edges[1:]):
            val, err = quad(integrand, a, bnd, epsabs=tol / 10, epsrel=1e-12, limit=200)
            total += val
            err_total += err
        if err_total > tol:
            raise QuadratureError(
                f"throughput integral for node {i} did not converge", err_total
            )
        out[i] = total
    return out


def power_integral_identity(n: int, delta: float) -> float:
    """Moment of the guard-zone survival power against the gain density:
    int (1 - F(x/(1+delta)))^n f(x) dx = (1+delta)/(1+delta+n) for unit-mean
    exponential gains."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if math.isinf(delta):
        return 1.0
    return (1.0 + delta) / (1.0 + delta + n)


def throughput(p, regime: Regime) -> np.ndarray:
    """Per-node average throughput of ``regime`` at probability vector ``p``.

    The perfect-CSI SINR validity flag is dropped here; call
    :func:`sinr_csi_throughput` directly when it matters.
    """
    model = regime.model
    if isinstance(model, Sinr):
        if isinstance(regime.csi, NoCsi):
            return sinr_nocsi_throughput(p, model.b, model.noise_ratio)
        return sinr_csi_throughput(p, model.b, model.noise_ratio)[0]
    if isinstance(regime.csi, NoCsi):
        return power_nocsi_throughput(p, model.delta)
    if math.isinf(model.delta):
        # collision model: thresholds cannot change who is alone
        return power_nocsi_throughput(p, model.delta)
    return power_csi_throughput(p, model.delta)


def homog_throughput(p: float, n: int, regime: Regime) -> float:
    """Homogeneous throughput of one node when everyone uses probability ``p``."""
    model = regime.model
    if isinstance(model, Sinr):
        if isinstance(regime.csi, NoCsi):
            return sinr_nocsi_homog(p, n, model.b, model.noise_ratio)
        return sinr_csi_homog(p, n, model.b, model.noise_ratio)
    if isinstance(regime.csi, NoCsi):
        return power_nocsi_homog(p, n, model.delta)
    return power_csi_homog(p, n, model.delta)
