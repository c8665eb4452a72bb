"""Command-line interface: scenario files in, CSV/JSON (and figures) out.

Exit codes: 0 success, 2 configuration or usage error, 3 infeasible
demands, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import nullcontext
from dataclasses import replace

import numpy as np

from .analytic import sinr_csi_throughput, throughput
from .config import ConfigError, RunConfig, dump_config, load_config, regime_of
from .dynamics import AnalyticOracle, EmpiricalEstimator, run_dynamics
from .models import NoCsi, PerfectCsi, Power, Sinr
from .output import write_csv, write_json
from .paradox import compare_homogeneous, default_grid
from .simulator import estimate_throughput, run
from .solver import (
    NonConvergence,
    find_homogeneous_equilibria,
    solve_delta0_concave,
    solve_equilibrium,
    theorem1_bound_check,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NONCONVERGENCE = 4


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario file (JSON)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument(
        "--dump-config",
        action="store_true",
        help="echo the normalized configuration as JSON and exit",
    )
    parser = argparse.ArgumentParser(
        prog="alohagame",
        description="Slotted-ALOHA random-access game: throughput, equilibria, "
        "simulation, dynamics, and Braess-paradox reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("throughput", parents=[common], help="analytic per-node throughput")
    p.add_argument("--p", help="probability vector override, e.g. 0.52,0.24")
    p.set_defaults(func=cmd_throughput)
    p = sub.add_parser("solve", parents=[common], help="constrained Nash equilibria")
    p.set_defaults(func=cmd_solve)
    p = sub.add_parser("simulate", parents=[common], help="slot-level Monte Carlo")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("dynamics", parents=[common], help="distributed update traces")
    p.add_argument(
        "--plot",
        nargs="?",
        const="",
        help="also render a PNG (default: --out with .png suffix)",
    )
    p.set_defaults(func=cmd_dynamics)
    p = sub.add_parser("paradox", parents=[common], help="CSI vs no-CSI comparison curves")
    p.add_argument("--grid", help="probability grid as start:stop:count (default 0:1:1001)")
    p.add_argument(
        "--plot",
        nargs="?",
        const="",
        help="also render a PNG (default: --out with .png suffix)",
    )
    p.set_defaults(func=cmd_paradox)
    return parser


def _fail(message: str, code: int) -> int:
    print(f"alohagame: {message}", file=sys.stderr)
    return code


def _out_stream(args):
    return open(args.out, "w", encoding="utf-8") if args.out else nullcontext(sys.stdout)


def _plot_path(args) -> str | None:
    path = getattr(args, "plot", None)
    if path is None:
        return None
    if path:
        return path
    if not args.out:
        raise ConfigError("--plot without a path needs --out to derive the PNG name")
    stem = args.out[: args.out.rfind(".")] if "." in args.out else args.out
    return stem + ".png"


def _parse_p(arg: str, n: int) -> np.ndarray:
    try:
        values = [float(v) for v in arg.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--p: {exc}") from exc
    if len(values) != n:
        raise ConfigError(f"--p: expected {n} values, got {len(values)}")
    if any(not 0 <= v <= 1 for v in values):
        raise ConfigError(f"--p: probabilities must lie in [0,1], got {values}")
    return np.array(values)


def _parse_grid(arg: str | None) -> np.ndarray:
    if arg is None:
        return default_grid()
    parts = arg.split(":")
    if len(parts) != 3:
        raise ConfigError("--grid: expected start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"--grid: {exc}") from exc
    if not (0 <= start <= stop <= 1) or count < 2:
        raise ConfigError("--grid: need 0 <= start <= stop <= 1 and count >= 2")
    return np.linspace(start, stop, count)


def _regime_payload(regime) -> dict:
    model = regime.model
    if isinstance(model, Sinr):
        desc = {"kind": "sinr", "b": model.b, "noise_ratio": model.noise_ratio}
    else:
        desc = {"kind": "power", "delta": model.delta}
    desc["csi"] = "none" if isinstance(regime.csi, NoCsi) else "perfect"
    return desc


def cmd_throughput(cfg: RunConfig, args) -> int:
    regime = regime_of(cfg)
    n = len(cfg.scenario.nodes)
    if args.p is not None:
        p = _parse_p(args.p, n)
    elif cfg.tx_prob_given:
        p = np.array([node.tx_prob for node in cfg.scenario.nodes])
    else:
        raise ConfigError("nodes: tx_prob required (or pass --p)")
    payload = {"regime": _regime_payload(regime)}
    if isinstance(regime.model, Sinr) and isinstance(regime.csi, PerfectCsi):
        rho, valid = sinr_csi_throughput(p, regime.model.b, regime.model.noise_ratio)
        payload["condition11_satisfied"] = valid
    else:
        rho = throughput(p, regime)
    rows = [
        (i, p[i], cfg.scenario.nodes[i].demand, rho[i]) for i in range(n)
    ]
    payload["nodes"] = [
        {"node": i, "p": pi, "demand": d, "rho": ri} for i, pi, d, ri in rows
    ]
    with _out_stream(args) as out:
        if args.format == "csv":
            write_csv(out, "throughput", ("node", "p", "demand", "rho"), rows)
        else:
            write_json(out, "throughput", payload)
    return EXIT_OK


def cmd_solve(cfg: RunConfig, args) -> int:
    regime = regime_of(cfg)
    demands = np.array([node.demand for node in cfg.scenario.nodes])
    model = regime.model
    n = demands.size
    if isinstance(model, Power) and model.delta == 0:
        result = solve_delta0_concave(demands)
    elif n > 1 and np.all(demands == demands[0]):
        try:
            result = find_homogeneous_equilibria(float(demands[0]), n, regime)
        except ValueError:
            # no homogeneous closed form (SINR perfect CSI with b < 1)
            result = solve_equilibrium(demands, regime)
    else:
        result = solve_equilibrium(demands, regime)
    payload = {
        "regime": _regime_payload(regime),
        "feasible": result.feasible,
        "iterations": result.iterations,
        "points": [
            {
                "classification": cls,
                "residual": res,
                "sum_p": float(point.sum()),
                "p": list(point),
            }
            for point, res, cls in zip(
                result.points, result.residuals, result.classifications
            )
        ],
    }
    if isinstance(model, Sinr) and isinstance(regime.csi, NoCsi) and result.feasible:
        payload["theorem1"] = {
            "bound": (model.b + 1.0) / model.b,
            "satisfied": theorem1_bound_check(result, model.b),
        }
    rows = [
        (k, cls, i, float(point[i]), res)
        for k, (point, res, cls) in enumerate(
            zip(result.points, result.residuals, result.classifications)
        )
        for i in range(n)
    ]
    with _out_stream(args) as out:
        if args.format == "csv":
            write_csv(
                out, "solve", ("point", "classification", "node", "p", "residual"), rows
            )
        else:
            write_json(out, "solve", payload)
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_simulate(cfg: RunConfig, args) -> int:
    if not cfg.tx_prob_given:
        raise ConfigError("nodes: tx_prob required for simulation")
    n = len(cfg.scenario.nodes)
    if cfg.replications == 1:
        trace = run(cfg.scenario)
        rows = [
            (i, int(trace.transmits[i]), int(trace.successes[i]),
             float(trace.rho_hat[i]), float(trace.p_hat[i]))
            for i in range(n)
        ]
        payload = {
            "slots": trace.slots,
            "seed": trace.seed,
            "nodes": [
                {"node": i, "transmits": t, "successes": s, "rho_hat": r, "p_hat": ph}
                for i, t, s, r, ph in rows
            ],
        }
        with _out_stream(args) as out:
            if args.format == "csv":
                write_csv(
                    out,
                    "simulate",
                    ("node", "transmits", "successes", "rho_hat", "p_hat"),
                    rows,
                )
            else:
                write_json(out, "simulate", payload)
        return EXIT_OK
    est = estimate_throughput(cfg.scenario, cfg.replications)
    rows = [
        (i, float(est.mean[i]), float(est.std_error[i]), est.replications)
        for i in range(n)
    ]
    payload = {
        "slots": cfg.scenario.slots,
        "seed": est.seed,
        "replications": est.replications,
        "nodes": [
            {"node": i, "rho_mean": m, "rho_se": s} for i, m, s, _ in rows
        ],
    }
    with _out_stream(args) as out:
        if args.format == "csv":
            write_csv(
                out, "simulate", ("node", "rho_mean", "rho_se", "replications"), rows
            )
        else:
            write_json(out, "simulate", payload)
    return EXIT_OK


def cmd_dynamics(cfg: RunConfig, args) -> int:
    regime = regime_of(cfg)
    demands = np.array([node.demand for node in cfg.scenario.nodes])
    if np.any(demands <= 0):
        raise ConfigError("nodes: dynamics requires every demand > 0")
    if cfg.dynamics.estimator == "analytic":
        estimator = AnalyticOracle()
    else:
        estimator = EmpiricalEstimator(
            seed=cfg.scenario.seed,
            slots_per_update=cfg.dynamics.update_every_slots,
        )
    trace = run_dynamics(
        demands,
        regime,
        estimator,
        eps=cfg.dynamics.eps,
        max_iter=cfg.dynamics.max_iter,
    )
    perfect = trace.thresholds is not None
    n = demands.size
    rows = []
    for i in range(n):
        rows.append((0, i, float(trace.p[0, i]),
                     float(trace.thresholds[0, i]) if perfect else None, None, None))
    for m in range(1, trace.p.shape[0]):
        for i in range(n):
            rows.append(
                (
                    m,
                    i,
                    float(trace.p[m, i]),
                    float(trace.thresholds[m, i]) if perfect else None,
                    float(trace.rho_hat[m - 1, i]),
                    float(trace.eps[m - 1]),
                )
            )
    payload = {
        "regime": _regime_payload(regime),
        "converged": trace.converged,
        "final_residual": trace.final_residual,
        "iterations": int(trace.eps.size),
        "seed": trace.seed,
        "p_final": list(trace.p[-1]),
    }
    if perfect:
        payload["thresholds_final"] = list(trace.thresholds[-1])
    with _out_stream(args) as out:
        if args.format == "csv":
            write_csv(out, "dynamics", ("iteration", "node", "p", "T", "rho_hat", "eps"), rows)
        else:
            write_json(out, "dynamics", payload)
    plot = _plot_path(args)
    if plot:
        from .plots import plot_dynamics

        plot_dynamics(trace, plot)
    return EXIT_OK


def cmd_paradox(cfg: RunConfig, args) -> int:
    grid = _parse_grid(args.grid)
    report = compare_homogeneous(
        cfg.scenario.model,
        len(cfg.scenario.nodes),
        grid,
        slots=cfg.scenario.slots,
        seed=cfg.scenario.seed,
    )
    rows = [
        (float(report.grid[k]), float(report.rho_nocsi[k]),
         float(report.rho_csi[k]), float(report.gap[k]))
        for k in range(report.grid.size)
    ]
    payload = {
        "model": _regime_payload_model(cfg.scenario.model),
        "n": report.n,
        "paradox_present": report.paradox_present,
        "tolerance": report.tolerance,
        "csi_simulated": report.csi_simulated,
        "curve": [
            {"p": p, "rho_nocsi": a, "rho_csi": b, "gap": g} for p, a, b, g in rows
        ],
    }
    with _out_stream(args) as out:
        if args.format == "csv":
            write_csv(out, "paradox", ("p", "rho_nocsi", "rho_csi", "gap"), rows)
        else:
            write_json(out, "paradox", payload)
    plot = _plot_path(args)
    if plot:
        from .plots import plot_paradox

        plot_paradox(report, plot)
    return EXIT_OK


def _regime_payload_model(model) -> dict:
    if isinstance(model, Sinr):
        return {"kind": "sinr", "b": model.b, "noise_ratio": model.noise_ratio}
    return {"kind": "power", "delta": model.delta}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed: must be a 64-bit unsigned integer")
            cfg = replace(cfg, scenario=replace(cfg.scenario, seed=args.seed))
        if args.dump_config:
            with _out_stream(args) as out:
                json.dump(dump_config(cfg), out, indent=2)
                out.write("\n")
            return EXIT_OK
        return args.func(cfg, args)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_CONFIG)
    except NonConvergence as exc:
        return _fail(str(exc), EXIT_NONCONVERGENCE)


if __name__ == "__main__":
    sys.exit(main())
