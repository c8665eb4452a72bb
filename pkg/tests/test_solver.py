import math

import numpy as np
import pytest
from scipy.integrate import simpson

from alohagame.analytic import (
    Regime,
    power_nocsi_throughput,
    sinr_nocsi_throughput,
    throughput,
)
from alohagame.models import NoCsi, PerfectCsi, Power, Sinr
from alohagame.solver import (
    PREFERRED,
    SECOND,
    UNIQUE,
    EquilibriumResult,
    Infeasible,
    _exact_best_response,
    auxiliary_g_value,
    best_response,
    find_homogeneous_equilibria,
    hessian_concavity_check,
    solve_delta0_concave,
    solve_equilibrium,
    theorem1_bound_check,
)

SINR_NOCSI = Regime(Sinr(5.0, 0.01), NoCsi())
POWER0 = Regime(Power(0.0), NoCsi())
COLLISION = Regime(Power(math.inf), NoCsi())


class TestBestResponse:
    def test_zero_demand(self):
        assert best_response(0, [0.4, 0.2], 0.0, SINR_NOCSI) == 0.0

    def test_paper_case_i_inverted(self):
        got = best_response(0, [0.24], 0.3957, SINR_NOCSI)
        assert got == pytest.approx(0.52, abs=1e-3)

    def test_power_delta0_hand_inversion(self):
        # r = p * (1 - 0.5*0.5) = 0.75 p, so p = 0.5 / 0.75
        got = best_response(0, [0.5], 0.5, POWER0)
        assert got == pytest.approx(2.0 / 3.0, abs=1e-11)

    def test_infeasible_raises(self):
        with pytest.raises(Infeasible):
            best_response(0, [0.9, 0.9], 0.9, COLLISION)

    def test_meets_demand_from_above(self):
        rng = np.random.default_rng(0)
        for regime in (SINR_NOCSI, POWER0, Regime(Power(0.8), PerfectCsi())):
            for _ in range(5):
                others = rng.uniform(0.1, 0.6, 2)
                demand = float(rng.uniform(0.0, 0.2))
                got = best_response(0, others, demand, regime)
                full = np.concatenate(([got], others))
                assert throughput(full, regime)[0] >= demand - 1e-9

    def test_matches_exact_inversion(self):
        rng = np.random.default_rng(1)
        regimes = (
            SINR_NOCSI,
            POWER0,
            COLLISION,
            Regime(Power(2.0), NoCsi()),
            Regime(Sinr(2.0, 0.05), PerfectCsi()),
        )
        for _ in range(40):
            others = rng.uniform(0.05, 0.95, int(rng.integers(1, 4)))
            demand = float(rng.uniform(0, 0.4))
            for regime in regimes:
                full = np.concatenate(([0.0], others))
                try:
                    via_bisect = best_response(0, others, demand, regime)
                except Infeasible:
                    with pytest.raises(Infeasible):
                        _exact_best_response(0, full, demand, regime)
                    continue
                via_exact = _exact_best_response(0, full, demand, regime)
                assert via_bisect == pytest.approx(via_exact, abs=2e-12)


class TestSolveEquilibrium:
    def test_paper_case_i(self):
        res = solve_equilibrium([0.3957, 0.129], SINR_NOCSI)
        assert res.feasible
        assert res.points[0] == pytest.approx([0.52, 0.24], abs=1e-3)
        assert res.points[0].sum() <= (5 + 1) / 5
        assert res.classifications[0] == PREFERRED

    def test_zero_demands(self):
        res = solve_equilibrium([0.0, 0.0, 0.0], SINR_NOCSI)
        assert np.array_equal(res.points[0], np.zeros(3))

    def test_residual_contract(self):
        rng = np.random.default_rng(2)
        for regime in (SINR_NOCSI, POWER0, COLLISION, Regime(Power(1.5), NoCsi())):
            p = rng.uniform(0.05, 0.4, 3)
            demands = throughput(p, regime)
            res = solve_equilibrium(demands, regime)
            assert res.feasible
            for point, resid in zip(res.points, res.residuals):
                assert resid <= 1e-8
                assert np.max(np.abs(throughput(point, regime) - demands)) <= 1e-8

    def test_monotone_iterates_from_minimal_start(self):
        res = solve_equilibrium([0.3957, 0.129], SINR_NOCSI)
        assert res.monotone is True

    def test_multistart_uniqueness_power_delta0(self):
        rng = np.random.default_rng(3)
        demands = np.array([0.3, 0.3, 0.3])
        ref = solve_equilibrium(demands, POWER0).points[0]
        for _ in range(20):
            start = rng.uniform(0.01, 0.99, 3)
            got = solve_equilibrium(demands, POWER0, start=start).points[0]
            assert got == pytest.approx(ref, abs=1e-6)

    def test_infeasible_demands_rejected(self):
        res = solve_equilibrium([0.3, 0.3], COLLISION)
        assert not res.feasible
        assert res.points == ()

    def test_second_point_for_collision(self):
        res = solve_equilibrium([0.16, 0.1], COLLISION)
        assert res.classifications == (PREFERRED, SECOND)
        assert len(res.points) == 2
        assert res.points[1].sum() > res.points[0].sum()

    def test_second_point_for_sinr(self):
        res = solve_equilibrium([0.3957, 0.129], SINR_NOCSI)
        assert res.classifications == (PREFERRED, SECOND)
        # known second root of the two-node quadratic
        assert res.points[1] == pytest.approx([0.960848, 0.680474], abs=1e-5)

    def test_at_most_two_points(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            p = rng.uniform(0.05, 0.5, 3)
            demands = sinr_nocsi_throughput(p, 5.0, 0.01)
            res = solve_equilibrium(demands, SINR_NOCSI)
            assert len(res.points) <= 2

    def test_power_small_delta_classified_unique(self):
        res = solve_equilibrium([0.2, 0.25, 0.15], Regime(Power(0.4), NoCsi()))
        assert res.classifications == (UNIQUE,)


class TestFindHomogeneousEquilibria:
    def test_collision_quadratic_roots(self):
        res = find_homogeneous_equilibria(0.16, 2, COLLISION)
        assert res.classifications == (PREFERRED, SECOND)
        assert res.points[0][0] == pytest.approx(0.2, abs=1e-9)
        assert res.points[1][0] == pytest.approx(0.8, abs=1e-9)

    def test_sinr_single_root_inside_cube(self):
        res = find_homogeneous_equilibria(0.375, 2, Regime(Sinr(1.0, 0.0), NoCsi()))
        assert res.classifications == (UNIQUE,)
        assert res.points[0][0] == pytest.approx(0.5, abs=1e-9)

    def test_symmetric_delta0_cap(self):
        res = find_homogeneous_equilibria(0.51, 2, POWER0)
        assert not res.feasible

    def test_tangent_demand_returns_unique(self):
        # collision n=2 peaks at p=0.5 with value 0.25
        res = find_homogeneous_equilibria(0.25, 2, COLLISION)
        assert res.classifications == (UNIQUE,)
        assert res.points[0][0] == pytest.approx(0.5, abs=1e-5)

    def test_power_csi_small_delta_unique(self):
        n = 4
        regime = Regime(Power(1.0 / (n - 1)), PerfectCsi())
        res = find_homogeneous_equilibria(0.1, n, regime)
        assert res.feasible
        assert res.classifications == (UNIQUE,)

    def test_two_root_structure_collision(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            n = int(rng.integers(2, 6))
            peak = (1 / n) * (1 - 1 / n) ** (n - 1)
            demand = float(rng.uniform(0.2, 0.9)) * peak
            res = find_homogeneous_equilibria(demand, n, COLLISION)
            assert len(res.points) == 2
            sums = [pt.sum() for pt in res.points]
            assert sum(s <= 1.0 + 1e-9 for s in sums) == 1

    def test_residuals_within_contract(self):
        res = find_homogeneous_equilibria(0.16, 2, COLLISION)
        assert all(r <= 1e-8 for r in res.residuals)


class TestAuxiliaryG:
    def test_single_node_closed_form(self):
        for p in (0.2, 0.5, 0.9):
            assert auxiliary_g_value([p], [0.3]) == pytest.approx(
                0.3 * math.log(p) - p, abs=1e-10
            )

    def test_single_node_maximizer_is_demand(self):
        rho = 0.3
        grid = np.linspace(0.05, 1.0, 96)
        values = [auxiliary_g_value([q], [rho]) for q in grid]
        assert grid[int(np.argmax(values))] == pytest.approx(rho, abs=0.02)

    def test_log_barrier_blows_down(self):
        assert auxiliary_g_value([1e-12, 0.5], [0.3, 0.3]) < -5.0

    def test_fine_grid_quadrature_oracle(self):
        p = np.array([0.5, 0.5])
        rho = np.array([0.3, 0.3])
        x = np.linspace(0.0, 1.0, 2**17 + 1)
        f = np.empty_like(x)
        f[0] = -p.sum()
        f[1:] = (np.prod(1.0 - np.outer(x[1:], p), axis=1) - 1.0) / x[1:]
        oracle = float(np.dot(rho, np.log(p)) + simpson(f, x=x))
        assert auxiliary_g_value(p, rho) == pytest.approx(oracle, abs=1e-10)

    def test_rejects_zero_probability(self):
        with pytest.raises(ValueError):
            auxiliary_g_value([0.0, 0.5], [0.1, 0.1])


class TestSolveDelta0Concave:
    def test_boundary_demand(self):
        res = solve_delta0_concave([1.0, 0.0, 0.0])
        assert res.feasible
        assert res.points[0] == pytest.approx([1.0, 0.0, 0.0], abs=1e-9)

    def test_cross_check_against_best_response(self):
        res = solve_delta0_concave([0.4, 0.3])
        ref = solve_equilibrium([0.4, 0.3], POWER0)
        assert res.points[0] == pytest.approx(ref.points[0], abs=1e-6)
        assert res.classifications == (UNIQUE,)

    def test_demand_sum_above_one_rejected(self):
        res = solve_delta0_concave([0.5, 0.5001])
        assert not res.feasible

    def test_exact_boundary_sum_accepted(self):
        res = solve_delta0_concave([0.5, 0.5])
        assert res.feasible
        assert res.points[0] == pytest.approx([1.0, 1.0], abs=1e-4)

    def test_zero_demand_nodes_stay_silent(self):
        res = solve_delta0_concave([0.3, 0.0, 0.2])
        assert res.points[0][1] == 0.0
        assert res.residuals[0] <= 1e-8

    def test_residual_contract_random(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            n = int(rng.integers(2, 6))
            rho = rng.uniform(0.01, 0.5, n)
            rho *= rng.uniform(0.2, 0.99) / rho.sum()
            res = solve_delta0_concave(rho)
            assert res.feasible and res.residuals[0] <= 1e-8


class TestHessianConcavity:
    def test_single_node_value(self):
        # G(t) = rho*t - e^t has second derivative -e^t = -p
        got = hessian_concavity_check([0.5], [0.3])
        assert got == pytest.approx(-0.5, abs=1e-6)

    def test_random_interior_points_concave(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            n = int(rng.integers(2, 7))
            p = rng.uniform(0.05, 0.95, n)
            rho = rng.uniform(0.0, 0.3, n)
            assert hessian_concavity_check(p, rho) < 1e-6

    def test_uniform_direction_strictly_negative(self):
        from alohagame.solver import _g_closed

        rng = np.random.default_rng(8)
        for _ in range(20):
            n = int(rng.integers(2, 7))
            p = rng.uniform(0.1, 0.9, n)
            rho = rng.uniform(0.0, 0.3, n)
            t = np.log(p)
            h = 1e-4 * np.ones(n)
            second = (
                _g_closed(np.exp(t + h), rho)
                - 2 * _g_closed(np.exp(t), rho)
                + _g_closed(np.exp(t - h), rho)
            ) / 1e-8
            assert second < 0


class TestTheorem1Bound:
    def test_paper_case_i(self):
        res = solve_equilibrium([0.3957, 0.129], SINR_NOCSI)
        assert theorem1_bound_check(res, 5.0)

    def test_collision_limit_bound_is_one(self):
        bounds = [(b + 1.0) / b for b in (1e3, 1e6, 1e9, 1e12)]
        assert bounds == sorted(bounds, reverse=True)
        assert bounds[-1] == pytest.approx(1.0, abs=1e-11)

    def test_homogeneous_two_root_case(self):
        b = 5.0
        regime = Regime(Sinr(b, 0.0), NoCsi())
        res = find_homogeneous_equilibria(0.1, 3, regime)
        assert len(res.points) == 2
        bound = (b + 1) / b
        inside = [pt.sum() <= bound + 1e-9 for pt in res.points]
        assert inside == [True, False]
        assert theorem1_bound_check(res, b)

    def test_raises_without_preferred_point(self):
        empty = EquilibriumResult((), (), False, (), 0)
        with pytest.raises(ValueError):
            theorem1_bound_check(empty, 5.0)
