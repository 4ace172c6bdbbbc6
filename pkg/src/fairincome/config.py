"""Run configuration: schema, defaults and validation.

A config is a YAML (or JSON) mapping::

    params: {alpha: 3.0, beta: 0.25, gamma: 1.0}
    grid: {min: 1.0, max: 162754.79, n: 32}     # or grid: {salaries: [...]}
    n_total: 1000
    method: all                                  # closed | potential | nbs | all
    simulation:                                  # optional
      protocol: logit                            # best_response | logit
      temperature: 1.0
      steps: 100000
      snapshot_every: 100
      burn_in: 100                               # in snapshots
      seed: 0
      n_agents: 1000                             # defaults to n_total when integral
      placement: uniform                         # uniform | all_at_lowest
    tolerances: {...}                            # see DEFAULT_TOLERANCES
    verify: {samples: 10000, seed: 0}

Every default is written back into the parsed config, so ``RunConfig.to_dict()``
fully describes a run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import yaml

from .errors import InvalidGrid, InvalidParameter, ParseError, ValidationError
from .model import ModelParams, SalaryGrid, build_salary_grid

__all__ = [
    "RunConfig",
    "SimConfig",
    "parse_config",
    "load_config",
    "config_from_dict",
    "DEFAULT_TOLERANCES",
    "DEFAULT_GRID_LEVELS",
    "METHODS",
]

METHODS = ("closed", "potential", "nbs", "all")
DEFAULT_GRID_LEVELS = 32
DEFAULT_TOLERANCES = {
    "fixed_point": 1e-10,
    "cross_method": 1e-7,
    "simulation_tv": 0.05,
    "equal_utility": 1e-10,
    "kkt_residual": 1e-10,
    "lambert_round_trip": 1e-10,
    "lagrange_form": 1e-10,
    "entropy_identity": 1e-10,
    "total_utility": 1e-9,
    "payroll": 1e-12,
    "lognormal_fit": 1e-8,
    "axiom_probe": 1e-10,
}
DEFAULT_SIM = {
    "protocol": "logit",
    "temperature": 1.0,
    "steps": 100_000,
    "snapshot_every": 100,
    "burn_in": 100,
    "seed": 0,
    "placement": "uniform",
}
DEFAULT_VERIFY = {"samples": 10_000, "seed": 0, "max_iters": 10_000}

_TOP_KEYS = {"params", "grid", "n_total", "method", "simulation", "tolerances", "verify"}


@dataclass(frozen=True)
class SimConfig:
    protocol: str
    temperature: float
    steps: int
    snapshot_every: int
    burn_in: int
    seed: int
    n_agents: int
    placement: str

    def to_dict(self):
        return {
            "protocol": self.protocol,
            "temperature": self.temperature,
            "steps": self.steps,
            "snapshot_every": self.snapshot_every,
            "burn_in": self.burn_in,
            "seed": self.seed,
            "n_agents": self.n_agents,
            "placement": self.placement,
        }


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    grid_spec: dict
    n_total: float
    method: str = "all"
    sim: Optional[SimConfig] = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    verify: dict = field(default_factory=lambda: dict(DEFAULT_VERIFY))

    @property
    def grid(self) -> SalaryGrid:
        spec = self.grid_spec
        if "salaries" in spec:
            return SalaryGrid(spec["salaries"])
        return build_salary_grid(spec["min"], spec["max"], spec["n"])

    def with_updates(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def to_dict(self):
        out = {
            "params": self.params.as_dict(),
            "grid": dict(self.grid_spec),
            "n_total": self.n_total,
            "method": self.method,
        }
        if self.sim is not None:
            out["simulation"] = self.sim.to_dict()
        out["tolerances"] = dict(self.tolerances)
        out["verify"] = dict(self.verify)
        return out


def _number(value, name, integer=False):
    if isinstance(value, bool):
        raise ValidationError(name, f"expected a number, got {value!r}")
    try:
        # PyYAML reads "1e-10" as a string; float() accepts it
        num = float(value)
    except (TypeError, ValueError):
        raise ValidationError(name, f"expected a number, got {value!r}") from None
    if not math.isfinite(num):
        raise ValidationError(name, f"must be finite, got {value!r}")
    if integer:
        if num != int(num):
            raise ValidationError(name, f"expected an integer, got {value!r}")
        return int(num)
    return num


def _mapping(value, name):
    if not isinstance(value, dict):
        raise ValidationError(name, f"expected a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(section, allowed, prefix):
    for key in section:
        if key not in allowed:
            raise ValidationError(f"{prefix}{key}", "unknown key")


def _parse_grid(raw):
    raw = _mapping(raw, "grid")
    has_list = "salaries" in raw
    has_range = any(k in raw for k in ("min", "max", "n"))
    if has_list and has_range:
        raise ValidationError("grid", "give either 'salaries' or 'min'/'max'/'n', not both")
    if not (has_list or has_range):
        raise ValidationError("grid", "needs 'salaries' or 'min' and 'max'")
    try:
        if has_list:
            _reject_unknown(raw, {"salaries"}, "grid.")
            if not isinstance(raw["salaries"], list):
                raise ValidationError("grid.salaries", "expected a list")
            spec = {"salaries": [_number(s, "grid.salaries") for s in raw["salaries"]]}
            SalaryGrid(spec["salaries"])
        else:
            _reject_unknown(raw, {"min", "max", "n"}, "grid.")
            for key in ("min", "max"):
                if key not in raw:
                    raise ValidationError(f"grid.{key}", "missing")
            spec = {
                "min": _number(raw["min"], "grid.min"),
                "max": _number(raw["max"], "grid.max"),
                "n": _number(raw.get("n", DEFAULT_GRID_LEVELS), "grid.n", integer=True),
            }
            build_salary_grid(spec["min"], spec["max"], spec["n"])
    except InvalidGrid as exc:
        raise ValidationError("grid", str(exc)) from None
    return spec


def _parse_sim(raw, n_total):
    raw = _mapping(raw, "simulation")
    allowed = set(DEFAULT_SIM) | {"n_agents"}
    _reject_unknown(raw, allowed, "simulation.")
    merged = {**DEFAULT_SIM, **raw}
    protocol = merged["protocol"]
    if protocol not in ("best_response", "logit"):
        raise ValidationError("simulation.protocol", f"unknown protocol {protocol!r}")
    placement = merged["placement"]
    if placement not in ("uniform", "all_at_lowest"):
        raise ValidationError("simulation.placement", f"unknown placement {placement!r}")
    if "n_agents" in raw:
        n_agents = _number(raw["n_agents"], "simulation.n_agents", integer=True)
    elif n_total == int(n_total):
        n_agents = int(n_total)
    else:
        raise ValidationError("simulation.n_agents", "required when n_total is not an integer")
    sim = SimConfig(
        protocol=protocol,
        temperature=_number(merged["temperature"], "simulation.temperature"),
        steps=_number(merged["steps"], "simulation.steps", integer=True),
        snapshot_every=_number(merged["snapshot_every"], "simulation.snapshot_every", integer=True),
        burn_in=_number(merged["burn_in"], "simulation.burn_in", integer=True),
        seed=_number(merged["seed"], "simulation.seed", integer=True),
        n_agents=n_agents,
        placement=placement,
    )
    if sim.temperature <= 0:
        raise ValidationError("simulation.temperature", "must be positive")
    if sim.steps < 1:
        raise ValidationError("simulation.steps", "must be at least 1")
    if sim.snapshot_every < 1:
        raise ValidationError("simulation.snapshot_every", "must be at least 1")
    if sim.n_agents < 1:
        raise ValidationError("simulation.n_agents", "must be at least 1")
    n_snapshots = 1 + -(-sim.steps // sim.snapshot_every)
    if not 0 <= sim.burn_in < n_snapshots:
        raise ValidationError("simulation.burn_in", f"must lie in [0, {n_snapshots})")
    return sim


def config_from_dict(doc) -> RunConfig:
    doc = _mapping(doc, "<document>")
    _reject_unknown(doc, _TOP_KEYS, "")
    for key in ("params", "grid", "n_total"):
        if key not in doc:
            raise ValidationError(key, "missing")

    raw_params = _mapping(doc["params"], "params")
    _reject_unknown(raw_params, {"alpha", "beta", "gamma"}, "params.")
    values = {}
    for name in ("alpha", "beta", "gamma"):
        if name not in raw_params:
            raise ValidationError(f"params.{name}", "missing")
        values[name] = _number(raw_params[name], f"params.{name}")
    try:
        params = ModelParams(**values)
    except InvalidParameter as exc:
        raise ValidationError(exc.name, str(exc)) from None

    grid_spec = _parse_grid(doc["grid"])
    n_total = _number(doc["n_total"], "n_total")
    if n_total <= 0:
        raise ValidationError("n_total", "must be positive")

    method = doc.get("method", "all")
    if method not in METHODS:
        raise ValidationError("method", f"must be one of {METHODS}, got {method!r}")

    sim = _parse_sim(doc["simulation"], n_total) if doc.get("simulation") is not None else None

    raw_tol = _mapping(doc.get("tolerances") or {}, "tolerances")
    _reject_unknown(raw_tol, set(DEFAULT_TOLERANCES), "tolerances.")
    tolerances = {**DEFAULT_TOLERANCES}
    for key, value in raw_tol.items():
        tolerances[key] = _number(value, f"tolerances.{key}")
        if tolerances[key] <= 0:
            raise ValidationError(f"tolerances.{key}", "must be positive")

    raw_verify = _mapping(doc.get("verify") or {}, "verify")
    _reject_unknown(raw_verify, set(DEFAULT_VERIFY), "verify.")
    verify = {k: _number(raw_verify.get(k, v), f"verify.{k}", integer=True) for k, v in DEFAULT_VERIFY.items()}
    if verify["samples"] < 1:
        raise ValidationError("verify.samples", "must be at least 1")

    return RunConfig(params, grid_spec, n_total, method, sim, tolerances, verify)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML/JSON config document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else None
        raise ParseError(str(exc.problem or exc), line=line) from None
    except yaml.YAMLError as exc:
        raise ParseError(str(exc)) from None
    if doc is None:
        raise ParseError("empty config document")
    if not isinstance(doc, dict):
        raise ParseError(f"config must be a mapping at top level, got {type(doc).__name__}", line=1)
    return config_from_dict(doc)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
