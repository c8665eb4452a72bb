"""Scenario file loading, validation, and normalized echo.

Scenario files are JSON documents with sections ``model``, ``nodes``,
``sim`` and ``dynamics``. Validation is strict: unknown keys and
out-of-range values are rejected with errors naming the offending location.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from .analytic import Regime
from .models import (
    CaptureModel,
    NodeSpec,
    NoCsi,
    PerfectCsi,
    Power,
    QuantizedCsi,
    Scenario,
    Sinr,
    quantized_level_probs,
)

__all__ = ["ConfigError", "DynamicsConfig", "RunConfig", "load_config", "parse_config", "dump_config"]


class ConfigError(Exception):
    """Invalid scenario file; the message starts with the config location."""


@dataclass(frozen=True)
class DynamicsConfig:
    eps: float | str = "harmonic"
    max_iter: int = 100_000
    update_every_slots: int = 100
    estimator: str = "empirical"


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    replications: int = 1
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    tx_prob_given: bool = True


def _require_keys(obj: dict, path: str, known: set[str], required: set[str] = frozenset()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in known:
            raise ConfigError(f"{path}: unknown key '{key}'")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{path}: missing required key '{key}'")


def _number(obj: dict, path: str, key: str, default=None, lo=None, hi=None, allow_inf=False):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{path}.{key}: required")
        return default
    val = obj[key]
    if allow_inf and val == "inf":
        return math.inf
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {val!r}")
    val = float(val)
    if lo is not None and val < lo:
        raise ConfigError(f"{path}.{key}: must be >= {lo}, got {val}")
    if hi is not None and val > hi:
        raise ConfigError(f"{path}.{key}: must be <= {hi}, got {val}")
    return val


def _integer(obj: dict, path: str, key: str, default=None, lo=None, hi=None):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{path}.{key}: required")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {val!r}")
    if lo is not None and val < lo:
        raise ConfigError(f"{path}.{key}: must be >= {lo}, got {val}")
    if hi is not None and val > hi:
        raise ConfigError(f"{path}.{key}: must be <= {hi}, got {val}")
    return val


def _parse_model(obj: Any, path: str) -> CaptureModel:
    _require_keys(obj, path, {"kind", "b", "noise_ratio", "delta"}, {"kind"})
    kind = obj["kind"]
    if kind == "sinr":
        if "delta" in obj:
            raise ConfigError(f"{path}.delta: not a sinr parameter")
        b = _number(obj, path, "b", lo=0.0)
        if b <= 0:
            raise ConfigError(f"{path}.b: must be > 0, got {b}")
        return Sinr(b=b, noise_ratio=_number(obj, path, "noise_ratio", default=0.0, lo=0.0))
    if kind == "power":
        for bad in ("b", "noise_ratio"):
            if bad in obj:
                raise ConfigError(f"{path}.{bad}: not a power parameter")
        return Power(delta=_number(obj, path, "delta", lo=0.0, allow_inf=True))
    raise ConfigError(f"{path}.kind: expected 'sinr' or 'power', got {kind!r}")


def _parse_csi(obj: Any, path: str):
    if obj == "none":
        return NoCsi()
    if obj == "perfect":
        return PerfectCsi()
    if isinstance(obj, dict):
        _require_keys(obj, path, {"quantized"}, {"quantized"})
        spec = obj["quantized"]
        _require_keys(spec, f"{path}.quantized", {"cutpoints", "probs"}, {"cutpoints", "probs"})
        for key in ("cutpoints", "probs"):
            if not isinstance(spec[key], list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in spec[key]
            ):
                raise ConfigError(f"{path}.quantized.{key}: expected a list of numbers")
        try:
            return QuantizedCsi(tuple(spec["cutpoints"]), tuple(spec["probs"]))
        except ValueError as exc:
            raise ConfigError(f"{path}.quantized: {exc}") from exc
    raise ConfigError(f"{path}: expected 'none', 'perfect' or a quantized object, got {obj!r}")


def _parse_node(obj: Any, path: str) -> tuple[NodeSpec, bool]:
    _require_keys(obj, path, {"demand", "csi", "tx_prob"}, {"demand"})
    demand = _number(obj, path, "demand", lo=0.0, hi=1.0)
    csi = _parse_csi(obj.get("csi", "none"), f"{path}.csi")
    given = "tx_prob" in obj
    tx = _number(obj, path, "tx_prob", default=0.0, lo=0.0, hi=1.0)
    if isinstance(csi, QuantizedCsi):
        if given:
            raise ConfigError(f"{path}.tx_prob: derived from the quantized strategy, do not set")
        tx = float(
            sum(
                s * q
                for s, q in zip(csi.probs, quantized_level_probs(csi.cutpoints))
            )
        )
        given = True
    try:
        return NodeSpec(demand=demand, csi=csi, tx_prob=tx), given
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_config(obj: Any, source: str = "config") -> RunConfig:
    _require_keys(obj, source, {"model", "nodes", "sim", "dynamics"}, {"model", "nodes"})
    model = _parse_model(obj["model"], f"{source}.model")
    raw_nodes = obj["nodes"]
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise ConfigError(f"{source}.nodes: expected a non-empty list")
    parsed = [
        _parse_node(node, f"{source}.nodes[{i}]") for i, node in enumerate(raw_nodes)
    ]
    nodes = tuple(spec for spec, _ in parsed)
    tx_given = all(given for _, given in parsed)
    sim = obj.get("sim", {})
    _require_keys(sim, f"{source}.sim", {"slots", "seed", "replications"})
    slots = _integer(sim, f"{source}.sim", "slots", default=1_000_000, lo=1)
    seed = _integer(sim, f"{source}.sim", "seed", default=0, lo=0, hi=2**64 - 1)
    replications = _integer(sim, f"{source}.sim", "replications", default=1, lo=1)
    dyn = obj.get("dynamics", {})
    _require_keys(
        dyn, f"{source}.dynamics", {"eps", "max_iter", "update_every_slots", "estimator"}
    )
    eps = dyn.get("eps", "harmonic")
    if eps != "harmonic":
        if isinstance(eps, bool) or not isinstance(eps, (int, float)) or not eps > 0:
            raise ConfigError(
                f"{source}.dynamics.eps: expected 'harmonic' or a positive number, got {eps!r}"
            )
        eps = float(eps)
    estimator = dyn.get("estimator", "empirical")
    if estimator not in ("empirical", "analytic"):
        raise ConfigError(
            f"{source}.dynamics.estimator: expected 'empirical' or 'analytic', got {estimator!r}"
        )
    dynamics = DynamicsConfig(
        eps=eps,
        max_iter=_integer(dyn, f"{source}.dynamics", "max_iter", default=100_000, lo=1),
        update_every_slots=_integer(
            dyn, f"{source}.dynamics", "update_every_slots", default=100, lo=1
        ),
        estimator=estimator,
    )
    try:
        scenario = Scenario(nodes=nodes, model=model, seed=seed, slots=slots)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return RunConfig(
        scenario=scenario,
        replications=replications,
        dynamics=dynamics,
        tx_prob_given=tx_given,
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(obj, source=path)


def _dump_csi(csi) -> Any:
    if isinstance(csi, NoCsi):
        return "none"
    if isinstance(csi, PerfectCsi):
        return "perfect"
    return {"quantized": {"cutpoints": list(csi.cutpoints), "probs": list(csi.probs)}}


def dump_config(cfg: RunConfig) -> dict:
    """Normalized scenario document; reparsing it reproduces ``cfg``."""
    model = cfg.scenario.model
    if isinstance(model, Sinr):
        model_obj = {"kind": "sinr", "b": model.b, "noise_ratio": model.noise_ratio}
    else:
        model_obj = {
            "kind": "power",
            "delta": "inf" if math.isinf(model.delta) else model.delta,
        }
    nodes = []
    for node in cfg.scenario.nodes:
        entry: dict[str, Any] = {"demand": node.demand, "csi": _dump_csi(node.csi)}
        if not isinstance(node.csi, QuantizedCsi):
            entry["tx_prob"] = node.tx_prob
        nodes.append(entry)
    return {
        "model": model_obj,
        "nodes": nodes,
        "sim": {
            "slots": cfg.scenario.slots,
            "seed": cfg.scenario.seed,
            "replications": cfg.replications,
        },
        "dynamics": {
            "eps": cfg.dynamics.eps,
            "max_iter": cfg.dynamics.max_iter,
            "update_every_slots": cfg.dynamics.update_every_slots,
            "estimator": cfg.dynamics.estimator,
        },
    }


def regime_of(cfg: RunConfig) -> Regime:
    """Analytic regime of the scenario; every node must share a non-quantized
    CSI mode."""
    modes = {type(node.csi) for node in cfg.scenario.nodes}
    if len(modes) > 1:
        raise ConfigError("nodes: analytic commands need a single CSI mode for all nodes")
    csi = cfg.scenario.nodes[0].csi
    if isinstance(csi, QuantizedCsi):
        raise ConfigError(
            "nodes: quantized CSI has no analytic form; only 'simulate' supports it"
        )
    return Regime(cfg.scenario.model, csi)
