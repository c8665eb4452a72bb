"""Constrained Nash equilibrium solvers.

An equilibrium is a probability vector where every node meets its demand
with the least transmission probability given the others, equivalently a
solution of r_i(p) = rho_i. Solvers: synchronous best-response iteration
from the minimal feasible start, unimodal root scans for homogeneous games,
and a concave log-barrier maximization for the perfect power capture model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .analytic import (
    Regime,
    _capture_coef,
    _esp,
    homog_throughput,
    power_csi_throughput,
    throughput,
)
from .models import NoCsi, PerfectCsi, Power, Sinr

__all__ = [
    "Infeasible",
    "NonConvergence",
    "PREFERRED",
    "SECOND",
    "UNIQUE",
    "EquilibriumResult",
    "best_response",
    "solve_equilibrium",
    "find_homogeneous_equilibria",
    "auxiliary_g_value",
    "solve_delta0_concave",
    "hessian_concavity_check",
    "theorem1_bound_check",
]

PREFERRED = "preferred"
SECOND = "second"
UNIQUE = "unique"

_BISECT_TOL = 1e-12


class Infeasible(Exception):
    """A node's demand cannot be met even at transmission probability 1."""

    def __init__(self, node: int, demand: float, ceiling: float):
        super().__init__(
            f"node {node}: demand {demand} exceeds reachable throughput {ceiling}"
        )
        self.node = node
        self.demand = demand
        self.ceiling = ceiling


class NonConvergence(Exception):
    """Iteration cap reached while the residual was still contracting."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"no convergence after {iterations} iterations, residual {residual:.3e}"
        )
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class EquilibriumResult:
    """Solved equilibrium points with per-point residuals and classification."""

    points: tuple[np.ndarray, ...]
    residuals: tuple[float, ...]
    feasible: bool
    classifications: tuple[str, ...]
    iterations: int
    monotone: bool | None = None


def _r_single(i: int, p: np.ndarray, regime: Regime) -> float:
    """Throughput of node i alone; avoids n quadratures in bisection loops."""
    model = regime.model
    if isinstance(model, Sinr):
        b, nr = model.b, model.noise_ratio
        others = np.delete(p, i)
        if isinstance(regime.csi, NoCsi):
            return math.exp(-b * nr) * p[i] * float(np.prod(1.0 - b * others / (1.0 + b)))
        beta = math.exp(-b * nr)
        a = float(np.prod(others ** (b + 1.0) / (b + 1.0) + 1.0 - others))
        return beta * a + float(np.prod(1.0 - others)) * min(p[i] - beta, 0.0)
    if isinstance(regime.csi, NoCsi) or math.isinf(model.delta):
        others = np.delete(p, i)
        e = _esp(others)
        n = p.size
        coef = np.array([_capture_coef(k, model.delta) for k in range(n)])
        return p[i] * float(np.sum((-1.0) ** np.arange(n) * coef * e))
    if p[i] == 0.0:
        return 0.0
    return float(power_csi_throughput(p, model.delta)[i])


def best_response(i: int, p_other, demand: float, regime: Regime) -> float:
    """Smallest p_i meeting ``demand`` against ``p_other``, by bisection.

    Raises :class:`Infeasible` when the demand is out of reach at p_i = 1.
    """
    if not (0 <= demand <= 1):
        raise ValueError(f"demand must lie in [0,1], got {demand}")
    p_other = np.asarray(p_other, dtype=float)
    if demand == 0:
        return 0.0

    def r_of(pi: float) -> float:
        return _r_single(0, np.concatenate(([pi], p_other)), regime)

    ceiling = r_of(1.0)
    if ceiling < demand:
        raise Infeasible(i, demand, ceiling)
    if r_of(0.0) >= demand:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if r_of(mid) >= demand:
            hi = mid
        else:
            lo = mid
    return hi


def _exact_best_response(i: int, p: np.ndarray, demand: float, regime: Regime) -> float:
    """Best response via algebraic inversion where r_i is (piecewise) linear
    in p_i; identical to :func:`best_response` up to the bisection tolerance."""
    if demand == 0:
        return 0.0
    model = regime.model
    others = np.delete(p, i)
    if isinstance(model, Sinr):
        b, nr = model.b, model.noise_ratio
        beta = math.exp(-b * nr)
        if isinstance(regime.csi, NoCsi):
            slope = beta * float(np.prod(1.0 - b * others / (1.0 + b)))
            if demand > slope:
                raise Infeasible(i, demand, slope)
            return demand / slope
        a = beta * float(np.prod(others ** (b + 1.0) / (b + 1.0) + 1.0 - others))
        bb = float(np.prod(1.0 - others))
        if demand <= a - bb * beta:
            return 0.0
        if demand > a or bb == 0.0:
            raise Infeasible(i, demand, a)
        return beta + (demand - a) / bb
    if isinstance(regime.csi, NoCsi) or math.isinf(model.delta):
        e = _esp(others)
        n = p.size
        coef = np.array([_capture_coef(k, model.delta) for k in range(n)])
        slope = float(np.sum((-1.0) ** np.arange(n) * coef * e))
        if slope <= 0.0 or demand > slope:
            raise Infeasible(i, demand, max(slope, 0.0))
        return demand / slope
    return best_response(i, others, demand, regime)


def _residual(p: np.ndarray, demands: np.ndarray, regime: Regime) -> float:
    return float(np.max(np.abs(throughput(p, regime) - demands)))


def _infeasible(iterations: int, monotone) -> EquilibriumResult:
    return EquilibriumResult((), (), False, (), iterations, monotone)


def _classify(regime: Regime, n: int) -> str:
    model = regime.model
    if isinstance(model, Power) and not math.isinf(model.delta):
        if n == 1 or model.delta <= 1.0 / (n - 1):
            return UNIQUE
    return PREFERRED


def _second_point_newton(
    p_pref: np.ndarray, demands: np.ndarray, regime: Regime
) -> np.ndarray | None:
    """Damped Newton for a second equilibrium, started from the componentwise
    reflection 1 - p_pref and, failing that, from points partway between the
    preferred point and the all-ones corner. Returns a distinct equilibrium
    or None."""
    starts = [np.clip(1.0 - p_pref, 0.0, 1.0)]
    starts += [p_pref + tau * (1.0 - p_pref) for tau in (0.5, 0.75, 1.0)]
    for start in starts:
        p = _newton_run(start, demands, regime)
        if p is not None and np.max(np.abs(p - p_pref)) > 1e-6:
            return p
    return None


def _newton_run(start: np.ndarray, demands: np.ndarray, regime: Regime):
    p = start.copy()
    h = 1e-7

    def f_of(q):
        return throughput(q, regime) - demands

    fval = f_of(p)
    for _ in range(200):
        if np.max(np.abs(fval)) <= 1e-10:
            break
        jac = np.empty((p.size, p.size))
        for j in range(p.size):
            q = p.copy()
            q[j] = min(p[j] + h, 1.0)
            step = q[j] - p[j]
            if step == 0.0:
                q[j] = p[j] - h
                step = -h
            jac[:, j] = (f_of(q) - fval) / step
        try:
            delta = np.linalg.solve(jac, -fval)
        except np.linalg.LinAlgError:
            return None
        lam, norm0 = 1.0, np.max(np.abs(fval))
        while lam > 1e-8:
            trial = np.clip(p + lam * delta, 0.0, 1.0)
            ftrial = f_of(trial)
            if np.max(np.abs(ftrial)) < norm0 * (1.0 - 1e-4 * lam):
                p, fval = trial, ftrial
                break
            lam *= 0.5
        else:
            return None
    if np.max(np.abs(fval)) > 1e-9:
        return None
    return p


def solve_equilibrium(
    demands,
    regime: Regime,
    start=None,
    max_iter: int = 100_000,
    residual_tol: float = 1e-9,
    stall_window: int = 100,
) -> EquilibriumResult:
    """Synchronous best-response iteration.

    Starts from p(0) = demands (the minimal feasible point) unless ``start``
    is given; from the default start the iterates are componentwise
    nondecreasing, which is verified and reported in ``monotone``. Declares
    infeasibility when a best response is unreachable or when the residual
    stops contracting for ``stall_window`` consecutive iterations; raises
    :class:`NonConvergence` if the cap is hit while still contracting.
    """
    rho = np.asarray(demands, dtype=float)
    if np.any(rho < 0) or np.any(rho > 1):
        raise ValueError(f"demands must lie in [0,1], got {rho}")
    from_minimal = start is None
    p = rho.copy() if from_minimal else np.asarray(start, dtype=float).copy()
    monotone = True if from_minimal else None
    best = math.inf
    stall = 0
    residual = math.inf
    for m in range(1, max_iter + 1):
        p_new = p.copy()
        for i in range(rho.size):
            try:
                p_new[i] = _exact_best_response(i, p, rho[i], regime)
            except Infeasible:
                if from_minimal:
                    # iterates stay below the smallest solution, so an
                    # unreachable demand here proves infeasibility
                    return _infeasible(m, monotone)
                p_new[i] = 1.0  # transient overshoot from a non-minimal start
        if from_minimal and np.any(p_new < p - 1e-12):
            monotone = False
        p = p_new
        residual = _residual(p, rho, regime)
        if residual <= residual_tol:
            second = None
            model = regime.model
            if isinstance(regime.csi, NoCsi) and (
                isinstance(model, Sinr)
                or (isinstance(model, Power) and math.isinf(model.delta))
            ):
                second = _second_point_newton(p, rho, regime)
            points = [p]
            classes = [_classify(regime, rho.size)]
            if second is not None:
                points.append(second)
                classes = [PREFERRED, SECOND]
            return EquilibriumResult(
                points=tuple(points),
                residuals=tuple(_residual(q, rho, regime) for q in points),
                feasible=True,
                classifications=tuple(classes),
                iterations=m,
                monotone=monotone,
            )
        if residual >= best * (1.0 - 1e-9):
            stall += 1
            if stall >= stall_window:
                return _infeasible(m, monotone)
        else:
            stall = 0
            best = residual
    raise NonConvergence(residual, max_iter)


def _golden_max(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while d - c > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _branch_root(f, lo, hi, target, increasing):
    for _ in range(200):
        if hi - lo <= _BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        if (f(mid) >= target) == increasing:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def find_homogeneous_equilibria(demand: float, n: int, regime: Regime) -> EquilibriumResult:
    """Roots of the unimodal homogeneous throughput curve at ``demand``.

    Returns the ascending-branch root (preferred) and, when the curve comes
    back down through the demand, the descending-branch root (second); a
    demand meeting the curve only at its peak yields one root marked unique.
    """
    if not (0 <= demand <= 1):
        raise ValueError(f"demand must lie in [0,1], got {demand}")

    def f(q: float) -> float:
        return homog_throughput(q, n, regime)

    p_star = _golden_max(f, 0.0, 1.0)
    f_star = f(p_star)
    if demand > f_star:
        return _infeasible(0, None)
    roots = [_branch_root(f, 0.0, p_star, demand, increasing=True)]
    if p_star < 1.0 - _BISECT_TOL and f(1.0) <= demand:
        r2 = _branch_root(f, p_star, 1.0, demand, increasing=False)
        # a tangent demand localizes both branch roots only to ~sqrt(eps)
        # around the peak; treat them as the single tangent root
        if abs(r2 - roots[0]) > 1e-6:
            roots.append(r2)
    classes = [PREFERRED, SECOND] if len(roots) == 2 else [UNIQUE]
    return EquilibriumResult(
        points=tuple(np.full(n, r) for r in roots),
        residuals=tuple(abs(f(r) - demand) for r in roots),
        feasible=True,
        classifications=tuple(classes),
        iterations=0,
        monotone=None,
    )


def _g_integrand_series(p: np.ndarray):
    # leading elementary symmetric coefficients of (prod(1-p_j x) - 1)/x
    e = _esp(p)
    coef = [-(e[k] if k < e.size else 0.0) * (-1.0) ** (k + 1) for k in range(1, 5)]
    return coef


def auxiliary_g_value(p, demands) -> float:
    """Log-barrier potential whose interior critical point solves the
    perfect-power-capture equilibrium equations.

    G(p) = sum_i rho_i ln p_i + int_0^1 (prod_j (1 - p_j x) - 1)/x dx, the
    integrand extended by continuity (value -sum p_j) at x = 0.
    """
    p = np.asarray(p, dtype=float)
    rho = np.asarray(demands, dtype=float)
    if np.any(p <= 0) or np.any(p > 1):
        raise ValueError(f"p must lie in (0,1], got {p}")
    c1, c2, c3, c4 = _g_integrand_series(p)

    def integrand(x: float) -> float:
        if x < 1e-6:
            return c1 + x * (c2 + x * (c3 + x * c4))
        return (float(np.prod(1.0 - p * x)) - 1.0) / x

    val, _err = quad(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    return float(np.dot(rho, np.log(p)) + val)


def _g_closed(p: np.ndarray, rho: np.ndarray) -> float:
    # same potential through the elementary-symmetric expansion of the integral
    e = _esp(p)
    k = np.arange(1, p.size + 1)
    return float(np.dot(rho, np.log(p)) + np.sum((-1.0) ** k * e[1:] / k))


def _power0_throughput(p: np.ndarray) -> np.ndarray:
    n = p.size
    coef = 1.0 / np.arange(1.0, n + 1.0)
    signs = (-1.0) ** np.arange(n)
    out = np.empty_like(p)
    for i in range(n):
        e = _esp(np.delete(p, i))
        out[i] = p[i] * float(np.sum(signs * coef * e))
    return out


def solve_delta0_concave(
    demands, max_iter: int = 200_000, residual_tol: float = 1e-9
) -> EquilibriumResult:
    """Unique perfect-power-capture equilibrium via concave maximization.

    Feasibility is exactly sum(rho) <= 1. Nodes with zero demand are removed
    first (they keep p = 0); the rest is a projected gradient ascent on G in
    t = ln p coordinates, where the gradient is rho - r(p), with Armijo
    backtracking and the iterate clamped to t <= 0.
    """
    rho = np.asarray(demands, dtype=float)
    if np.any(rho < 0) or np.any(rho > 1):
        raise ValueError(f"demands must lie in [0,1], got {rho}")
    if rho.sum() > 1.0:
        return _infeasible(0, None)
    active = rho > 0
    p_full = np.zeros(rho.size)
    if not active.any():
        return EquilibriumResult(
            (p_full,), (0.0,), True, (UNIQUE,), 0, None
        )
    r_act = rho[active]
    t = np.log(np.maximum(r_act, 1e-6))
    iterations = 0
    alpha0 = 1.0  # grows with accepted steps; the curvature scale can be << 1
    endgame = False
    for iterations in range(1, max_iter + 1):
        p = np.exp(t)
        grad = r_act - _power0_throughput(p)
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= residual_tol:
            break
        g0 = _g_closed(p, r_act)
        # once the best possible Armijo gain falls below G's float
        # resolution the test is noise; finish on gradient-norm descent
        if not endgame and alpha0 * float(np.dot(grad, grad)) < 1e-14 * max(
            1.0, abs(g0)
        ):
            endgame = True
        accepted = False
        alpha = alpha0
        while alpha > 1e-18:
            t_new = np.minimum(t + alpha * grad, 0.0)
            if np.array_equal(t_new, t):
                break
            if endgame:
                trial = float(
                    np.max(np.abs(r_act - _power0_throughput(np.exp(t_new))))
                )
                ok = trial <= 0.999 * gnorm
            else:
                ok = _g_closed(np.exp(t_new), r_act) >= g0 + 1e-4 * float(
                    np.dot(grad, t_new - t)
                )
            if ok:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if endgame:
                if gnorm <= 1e-8:
                    break  # stagnated within the residual contract
                raise NonConvergence(gnorm, iterations)
            endgame = True
            continue
        t = t_new
        alpha0 = min(alpha * 2.0, 1e9)
    else:
        raise NonConvergence(float(np.max(np.abs(grad))), max_iter)
    p_full[active] = np.exp(t)
    residual = float(np.max(np.abs(_power0_throughput(p_full) - rho)))
    return EquilibriumResult(
        points=(p_full,),
        residuals=(residual,),
        feasible=True,
        classifications=(UNIQUE,),
        iterations=iterations,
        monotone=None,
    )


def hessian_concavity_check(p, demands, step: float = 1e-4) -> float:
    """Largest eigenvalue of the numerical Hessian of G in t-coordinates.

    Central differences with the given step; strict concavity of G means the
    value must be negative (tests assert < 1e-6 to absorb differencing noise).
    """
    p = np.asarray(p, dtype=float)
    rho = np.asarray(demands, dtype=float)
    if np.any(p <= 0) or np.any(p >= 1):
        raise ValueError(f"p must be interior, got {p}")
    t0 = np.log(p)
    n = p.size

    def g_at(t: np.ndarray) -> float:
        return _g_closed(np.exp(t), rho)

    g0 = g_at(t0)
    hess = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = step
        hess[i, i] = (g_at(t0 + ei) - 2.0 * g0 + g_at(t0 - ei)) / step**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = step
            hess[i, j] = hess[j, i] = (
                g_at(t0 + ei + ej)
                - g_at(t0 + ei - ej)
                - g_at(t0 - ei + ej)
                + g_at(t0 - ei - ej)
            ) / (4.0 * step**2)
    return float(np.linalg.eigvalsh(0.5 * (hess + hess.T)).max())


def theorem1_bound_check(result: EquilibriumResult, b: float) -> bool:
    """Whether the preferred (or unique) point keeps the total transmission
    probability within (b+1)/b."""
    for point, cls in zip(result.points, result.classifications):
        if cls in (PREFERRED, UNIQUE):
            return bool(point.sum() <= (b + 1.0) / b + 1e-9)
    raise ValueError("result has no preferred or unique point")
