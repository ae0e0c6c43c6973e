"""Run configuration: YAML schema, validation, sweep expansion and spec assembly."""

from __future__ import annotations

import copy
import hashlib
import itertools
import json
from pathlib import Path
from typing import Any, Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import DomainError
from .mc_network import BsNode, NetworkSpec
from .radio.params import AntennaSpec, DeploymentSpec, MicromobilityParams, PropagationParams
from .radio.scenario import ScenarioConfig
from .radio.sinr import McsTable
from .rqs_core import BaselineSpec, FlowClass
from .rqs_dynamics import SignalsSpec
from .service_variants import AdaptiveSpec, ElasticSpec, PrioritySpec

MODELS = ("baseline", "signals", "reservation", "network", "priority", "adaptive", "elastic")
FROM_SCENARIO = "scenario"


class ConfigError(Exception):
    """Raised while loading a config; ``code`` is the process exit status."""

    PARSE, SCHEMA, MISSING = 2, 3, 4

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


Demand = Union[list[float], Literal["scenario"]]
Rate = Union[float, Literal["scenario"]]


def _reservation_ok(v: float) -> float:
    if not 0.0 <= v < 1.0:
        raise ValueError("reservation must lie in [0,1)")
    return v


class McsSection(_Strict):
    thresholds_db: list[float]
    units: list[int]


class ScenarioSection(_Strict):
    propagation: PropagationParams = Field(default_factory=PropagationParams)
    deployment: DeploymentSpec = Field(default_factory=DeploymentSpec)
    antenna: AntennaSpec = Field(default_factory=AntennaSpec)
    target_rate_mbps: float = Field(10.0, gt=0)
    unit_bandwidth_mhz: float = Field(1.44, gt=0)
    mcs: McsSection | None = None
    blockage_dynamics: bool = True
    micromobility: MicromobilityParams | None = None
    realignment_period: float | None = Field(None, gt=0)
    sinr_grid_db: tuple[float, float, float] = (-20.0, 60.0, 0.05)

    def build(self) -> ScenarioConfig:
        mcs = None
        if self.mcs is not None:
            mcs = McsTable(tuple(self.mcs.thresholds_db), tuple(self.mcs.units), self.target_rate_mbps)
        return ScenarioConfig(self.propagation, self.deployment, self.antenna, self.target_rate_mbps,
                              self.unit_bandwidth_mhz, mcs, self.blockage_dynamics, self.micromobility,
                              self.realignment_period, tuple(self.sinr_grid_db))


# ---------------------------------------------------------------------------
# per-model parameters

class BaselineParams(_Strict):
    servers: int | None = Field(None, ge=1)
    resources: int = Field(ge=0)
    arrival_rate: float = Field(gt=0)
    service_rate: float = Field(1.0, gt=0)
    demand: Demand = FROM_SCENARIO


class SignalsParams(_Strict):
    servers: int = Field(ge=1)
    resources: int = Field(ge=0)
    arrival_rate: float = Field(ge=0)
    service_rate: float = Field(1.0, gt=0)
    signal_rate: Rate = FROM_SCENARIO
    demand: Demand = FROM_SCENARIO
    redraw: list[float] | None = None
    reservation: float = 0.0

    _res = field_validator("reservation")(_reservation_ok)

    @field_validator("signal_rate")
    @classmethod
    def _rate(cls, v):
        if v != FROM_SCENARIO and v < 0:
            raise ValueError("signal_rate must be nonnegative")
        return v


class NodeParams(_Strict):
    servers: int = Field(ge=1)
    resources: int = Field(ge=0)
    arrival_rate: float = Field(0.0, ge=0)
    service_rate: float = Field(1.0, gt=0)
    signal_rate: Rate = FROM_SCENARIO
    demand_primary: Demand = FROM_SCENARIO
    demand_secondary: Demand | None = None
    reservation: float = 0.0

    _res = field_validator("reservation")(_reservation_ok)


class NetworkParams(_Strict):
    node_count: int | None = None
    node: NodeParams | None = None
    nodes: list[NodeParams] | None = None
    total_arrival_rate: float | None = Field(None, ge=0)
    tol: float = Field(1e-8, gt=0)
    max_iterations: int = Field(200, ge=1)
    max_level: int = Field(50, ge=1)
    beta_method: Literal["approx", "exact"] = "approx"

    @model_validator(mode="after")
    def _shape(self):
        if (self.nodes is None) == (self.node is None):
            raise ValueError("give either a list of nodes or one node template with node_count")
        k = len(self.nodes) if self.nodes is not None else self.node_count
        if k is None:
            raise ValueError("node_count is required with a node template")
        if k < 2:
            raise ValueError("a network needs at least 2 base stations (K >= 2); a single station "
                             "is the reservation model of rqs_dynamics (model: reservation)")
        return self

    @property
    def K(self) -> int:
        return len(self.nodes) if self.nodes is not None else int(self.node_count)


class ClassParams(_Strict):
    arrival_rate: float = Field(ge=0)
    service_rate: float = Field(1.0, gt=0)
    demand: Demand = FROM_SCENARIO


class PriorityParams(_Strict):
    servers: int = Field(ge=1)
    resources: int = Field(ge=0)
    high: ClassParams
    low: ClassParams
    method: Literal["joint", "conditional"] = "joint"


class AdaptiveClass(_Strict):
    arrival_rate: float = Field(ge=0)
    service_rate: float = Field(1.0, gt=0)
    min_units: int = Field(1, ge=1)


class AdaptiveParams(_Strict):
    resources: int = Field(ge=1)
    reserved_native: int = Field(0, ge=0)
    reserved_offloaded: int = Field(0, ge=0)
    native: AdaptiveClass
    offloaded: AdaptiveClass
    mmwave_arrival_rate: float = Field(0.0, ge=0)


class ElasticParams(_Strict):
    arrival_rate: float = Field(ge=0)
    service_rate: float = Field(1.0, gt=0)
    coefficients: list[float]
    probs: list[float]
    servers: int | None = Field(None, ge=1)
    min_rate: float | None = Field(None, gt=0)
    release: Literal["size_biased", "bayes"] = "size_biased"


PARAMS = {"baseline": BaselineParams, "signals": SignalsParams, "reservation": SignalsParams,
          "network": NetworkParams, "priority": PriorityParams, "adaptive": AdaptiveParams,
          "elastic": ElasticParams}


# ---------------------------------------------------------------------------

class SweepAxis(_Strict):
    path: str
    values: list[Any] = Field(min_length=1)


class SimulationSection(_Strict):
    seed: int = Field(1, ge=0, lt=2 ** 64)
    measured_events: int = Field(1_000_000, ge=100)
    warmup_events: int | None = Field(None, ge=0)
    batch_count: int = Field(30, ge=10)
    sigmas: float = Field(3.0, gt=0)
    enabled: bool = False

    @model_validator(mode="after")
    def _batches(self):
        if self.measured_events < 10 * self.batch_count:
            raise ValueError("measured_events must be at least 10 * batch_count")
        return self


class NumericsSection(_Strict):
    solver_tol: float = Field(1e-12, gt=0)
    max_sweeps: int = Field(100_000, ge=1)
    solver_method: Literal["auto", "dense", "sparse", "gauss_seidel"] = "auto"


class OutputSection(_Strict):
    dir: str = "out"
    prefix: str = ""


class RunConfig(_Strict):
    model: Literal["baseline", "signals", "reservation", "network", "priority", "adaptive", "elastic"]
    scenario: ScenarioSection | None = None
    params: dict
    sweep: list[SweepAxis] = Field(default_factory=list)
    simulation: SimulationSection = Field(default_factory=SimulationSection)
    numerics: NumericsSection = Field(default_factory=NumericsSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @property
    def typed_params(self):
        return PARAMS[self.model].model_validate(self.params)

    def canonical(self) -> dict:
        return self.model_dump(mode="json")

    def fingerprint(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _format(err: ValidationError, prefix: tuple = ()) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in prefix + tuple(e["loc"]))
        msg = e["msg"].removeprefix("Value error, ")
        lines.append(f"{loc or '<root>'}: {msg}")
    return "; ".join(lines)


def _uses_scenario(obj) -> bool:
    if isinstance(obj, dict):
        return any(_uses_scenario(v) for v in obj.values())
    if isinstance(obj, list):
        return any(_uses_scenario(v) for v in obj)
    return obj == FROM_SCENARIO


def validate_config(raw: Any) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError(ConfigError.PARSE, "config must be a mapping at the top level")
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(ConfigError.SCHEMA, _format(exc)) from None
    try:
        typed = cfg.typed_params
    except ValidationError as exc:
        raise ConfigError(ConfigError.SCHEMA, _format(exc, ("params",))) from None
    full = typed.model_dump(mode="json")
    if cfg.model == "signals" and typed.reservation != 0:
        raise ConfigError(ConfigError.SCHEMA, "params.reservation: the signals model has no reservation; "
                                              "use model: reservation")
    if _uses_scenario(full) and cfg.scenario is None:
        raise ConfigError(ConfigError.SCHEMA, "params: 'scenario' values need a scenario section")
    cfg = cfg.model_copy(update={"params": full})
    dump = cfg.canonical()
    for axis in cfg.sweep:
        if not _has_path(dump, axis.path):
            raise ConfigError(ConfigError.SCHEMA, f"sweep.path: {axis.path!r} is not a parameter path")
        if axis.path.split(".")[0] not in ("params", "scenario"):
            raise ConfigError(ConfigError.SCHEMA, f"sweep.path: {axis.path!r} must start with params. or scenario.")
    return cfg


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(ConfigError.MISSING, f"config file not found: {p}")
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(ConfigError.PARSE, f"cannot parse {p}: {exc}") from None
    return validate_config(raw)


# ---------------------------------------------------------------------------
# sweeps

def _has_path(tree: dict, path: str) -> bool:
    node = tree
    for part in path.split("."):
        if isinstance(node, dict) and part in node:
            node = node[part]
        elif isinstance(node, list) and part.isdigit() and int(part) < len(node):
            node = node[int(part)]
        else:
            return False
    return True


def _set_path(tree: dict, path: str, value) -> None:
    parts = path.split(".")
    node = tree
    for part in parts[:-1]:
        node = node[int(part)] if isinstance(node, list) else node[part]
    last = parts[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def sweep_points(cfg: RunConfig) -> list[tuple[tuple, RunConfig]]:
    """Cartesian product of the sweep axes in declaration order (first axis slowest)."""
    if not cfg.sweep:
        return [((), cfg)]
    base = cfg.canonical()
    out = []
    for combo in itertools.product(*(axis.values for axis in cfg.sweep)):
        tree = copy.deepcopy(base)
        tree["sweep"] = []
        for axis, value in zip(cfg.sweep, combo):
            _set_path(tree, axis.path, value)
        out.append((combo, validate_config(tree)))
    return out


# ---------------------------------------------------------------------------
# assembling queue specs

def _demand(value, pmf):
    if value == FROM_SCENARIO:
        if pmf is None:
            raise DomainError("demand taken from the scenario but no scenario was parameterized")
        return pmf.normalized()
    return value


def _rate(value, alpha):
    return alpha if value == FROM_SCENARIO else value


def _admitted(rate: float, value, pmf) -> float:
    """Sessions in outage never reach the queue, so scenario-driven arrivals are thinned."""
    return rate * (1.0 - pmf.outage) if value == FROM_SCENARIO and pmf is not None else rate


def build_model(cfg: RunConfig, pmf=None, alpha: float | None = None):
    """Queue spec of ``cfg``; ``pmf``/``alpha`` come from the scenario when one is used."""
    prm = cfg.typed_params
    m = cfg.model
    if m == "baseline":
        lam = _admitted(prm.arrival_rate, prm.demand, pmf)
        return BaselineSpec(prm.servers, prm.resources, lam / prm.service_rate, _demand(prm.demand, pmf))
    if m in ("signals", "reservation"):
        return SignalsSpec(prm.servers, prm.resources, _admitted(prm.arrival_rate, prm.demand, pmf),
                           prm.service_rate, _rate(prm.signal_rate, alpha), _demand(prm.demand, pmf),
                           prm.reservation, prm.redraw)
    if m == "network":
        templates = prm.nodes if prm.nodes is not None else [prm.node] * prm.K
        nodes = []
        for t in templates:
            lam = prm.total_arrival_rate / prm.K if prm.total_arrival_rate is not None else t.arrival_rate
            second = t.demand_primary if t.demand_secondary is None else t.demand_secondary
            nodes.append(BsNode(t.servers, t.resources, _admitted(lam, t.demand_primary, pmf), t.service_rate,
                                _rate(t.signal_rate, alpha), _demand(t.demand_primary, pmf),
                                _demand(second, pmf), t.reservation))
        return NetworkSpec(tuple(nodes), prm.tol, prm.max_iterations, prm.max_level, prm.beta_method)
    if m == "priority":
        def fc(c):
            return FlowClass(_admitted(c.arrival_rate, c.demand, pmf), c.service_rate, _demand(c.demand, pmf))
        return PrioritySpec(prm.servers, prm.resources, fc(prm.high), fc(prm.low))
    if m == "adaptive":
        n, o = prm.native, prm.offloaded
        return AdaptiveSpec(prm.resources, prm.reserved_native, prm.reserved_offloaded,
                            (n.arrival_rate, n.service_rate, n.min_units),
                            (o.arrival_rate, o.service_rate, o.min_units), prm.mmwave_arrival_rate)
    return ElasticSpec(prm.arrival_rate, prm.service_rate, prm.coefficients, prm.probs, prm.servers, prm.min_rate)


def bundled_dir() -> Path:
    return Path(__file__).with_name("scenarios")


def bundled(name: str) -> Path:
    p = bundled_dir() / (name if name.endswith(".yaml") else name + ".yaml")
    if not p.is_file():
        raise ConfigError(ConfigError.MISSING, f"no bundled scenario named {name!r}")
    return p
