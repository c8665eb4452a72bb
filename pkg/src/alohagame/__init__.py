"""Slotted-ALOHA random-access game with SINR and power capture.

Analytic throughput for every CSI/capture regime, constrained Nash
equilibrium solvers, a seeded slot-level Monte Carlo oracle, the
distributed probability-update dynamics, and Braess-paradox reports.
"""

from .analytic import (
    QuadratureError,
    Regime,
    condition11_satisfied,
    homog_throughput,
    power_csi_homog,
    power_csi_throughput,
    power_integral_identity,
    power_nocsi_homog,
    power_nocsi_throughput,
    sinr_csi_homog,
    sinr_csi_throughput,
    sinr_nocsi_homog,
    sinr_nocsi_throughput,
    throughput,
)
from .dynamics import (
    AnalyticOracle,
    DynamicsTrace,
    EmpiricalEstimator,
    harmonic_eps,
    run_dynamics,
    update_step,
)
from .models import (
    CaptureModel,
    CsiMode,
    NodeSpec,
    NoCsi,
    PerfectCsi,
    Power,
    QuantizedCsi,
    Scenario,
    Sinr,
    SlotOutcome,
    decide_capture,
    quantized_level_probs,
    sample_gains,
    threshold_to_prob,
)
from .paradox import (
    NodeGap,
    ParadoxReport,
    compare_homogeneous,
    default_grid,
    heterogeneous_case_compare,
    verify_theorem2,
    verify_theorem4,
)
from .simulator import SimTrace, ThroughputEstimate, estimate_throughput, run
from .solver import (
    PREFERRED,
    SECOND,
    UNIQUE,
    EquilibriumResult,
    Infeasible,
    NonConvergence,
    auxiliary_g_value,
    best_response,
    find_homogeneous_equilibria,
    hessian_concavity_check,
    solve_delta0_concave,
    solve_equilibrium,
    theorem1_bound_check,
)

__version__ = "0.1.0"
