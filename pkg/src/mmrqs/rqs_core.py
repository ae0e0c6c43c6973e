"""Baseline resource queuing system.

A loss system with ``N`` servers and ``R`` resource units.  Each session
holds a random number of units, drawn from a demand pmf at arrival, until it
leaves.  Because the per-session chain has a product-form stationary
distribution, the aggregated process (number of sessions, occupied units)
can be written down directly using truncated convolutions of the demand pmf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

PMF_TOL = 1e-12


def as_pmf(p, tol: float = PMF_TOL) -> np.ndarray:
    """Validate a demand pmf indexed by resource units and return it as a float array."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError("pmf must be a non-empty one-dimensional sequence")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError("pmf entries must be finite and nonnegative")
    total = arr.sum()
    if abs(total - 1.0) > tol:
        raise DomainError(f"pmf must sum to 1, got {total!r}")
    return arr


def cumulative(p: np.ndarray, upto: int) -> float:
    """P(demand <= upto); zero for negative ``upto``."""
    if upto < 0:
        return 0.0
    return float(p[: upto + 1].sum())


def acceptance_table(p: np.ndarray, R: int) -> np.ndarray:
    """``acc[r] = P(demand <= R - r)`` for r = 0..R."""
    cdf = np.cumsum(np.pad(p, (0, max(0, R + 1 - p.size)))[: R + 1])
    return cdf[::-1].copy()


def convolve_demand(p, k: int, R: int) -> np.ndarray:
    """k-fold convolution of ``p`` truncated to indices 0..R.

    Mass that would land above ``R`` is discarded: it only ever feeds the
    blocking probability.
    """
    if k < 0:
        raise DomainError("convolution order must be nonnegative")
    p = np.asarray(p, dtype=float)
    base = np.zeros(R + 1)
    n = min(p.size, R + 1)
    base[:n] = p[:n]
    out = np.zeros(R + 1)
    out[0] = 1.0
    for _ in range(k):
        out = np.convolve(out, base)[: R + 1]
    return out


def convolution_table(p, N: int, R: int) -> np.ndarray:
    """Rows 0..N hold the truncated convolution powers of ``p``."""
    p = np.asarray(p, dtype=float)
    base = np.zeros(R + 1)
    n = min(p.size, R + 1)
    base[:n] = p[:n]
    table = np.zeros((N + 1, R + 1))
    table[0, 0] = 1.0
    for k in range(1, N + 1):
        table[k] = np.convolve(table[k - 1], base)[: R + 1]
    return table


@dataclass(frozen=True)
class BaselineSpec:
    """Servers, resources, offered load and demand pmf of a single flow.

    ``servers=None`` means an unbounded number of servers; it is capped at the
    largest number of sessions that can possibly fit into ``resources``.
    """

    servers: int | None
    resources: int
    load: float
    demand: Sequence[float]

    def __post_init__(self):
        p = as_pmf(self.demand)
        object.__setattr__(self, "demand", p)
        if self.resources < 0:
            raise DomainError("resources must be nonnegative")
        if not self.load > 0:
            raise DomainError("offered load must be positive")
        if self.servers is None:
            positive = np.flatnonzero(p > 0)
            smallest = int(positive[0])
            if smallest == 0:
                raise DomainError("unbounded servers need a demand pmf without mass at zero")
            object.__setattr__(self, "servers", max(1, self.resources // smallest))
        elif self.servers < 1:
            raise DomainError("servers must be at least 1")

    @property
    def N(self) -> int:
        return int(self.servers)

    @property
    def R(self) -> int:
        return int(self.resources)


@dataclass(frozen=True)
class FlowClass:
    arrival_rate: float
    service_rate: float
    demand: Sequence[float]

    def __post_init__(self):
        object.__setattr__(self, "demand", as_pmf(self.demand))
        if self.arrival_rate < 0 or not self.service_rate > 0:
            raise DomainError("arrival rate must be nonnegative and service rate positive")

    @property
    def load(self) -> float:
        return self.arrival_rate / self.service_rate


@dataclass(frozen=True)
class FlowSpec:
    """Several independent Poisson flows sharing one system."""

    servers: int
    resources: int
    classes: tuple[FlowClass, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if not self.classes:
            raise DomainError("at least one flow class is required")
        if self.servers < 1 or self.resources < 0:
            raise DomainError("invalid servers/resources")


@dataclass(frozen=True)
class AggregatedDistribution:
    """``probs[k, r]``: probability of k sessions holding r units in total."""

    probs: np.ndarray

    @property
    def empty(self) -> float:
        return float(self.probs[0, 0])

    def session_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def resource_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    def mean_sessions(self) -> float:
        return float(np.arange(self.probs.shape[0]) @ self.session_marginal())

    def mean_resources(self) -> float:
        return float(np.arange(self.probs.shape[1]) @ self.resource_marginal())


@dataclass(frozen=True)
class BaselineMetrics:
    blocking: float
    mean_resources: float


def product_form(load: float, table: np.ndarray) -> np.ndarray:
    """Normalised ``load**k / k! * table[k, r]`` computed in log space."""
    N = table.shape[0] - 1
    with np.errstate(divide="ignore"):
        log_w = np.log(table)
    k = np.arange(N + 1)
    log_w = log_w + (k * math.log(load) - gammaln(k + 1))[:, None]
    peak = np.max(log_w)
    w = np.exp(log_w - peak)
    return w / w.sum()


def baseline_stationary(spec: BaselineSpec) -> AggregatedDistribution:
    table = convolution_table(spec.demand, spec.N, spec.R)
    if not np.any(table[1:] > 0):
        probs = np.zeros_like(table)
        probs[0, 0] = 1.0
        return AggregatedDistribution(probs)
    return AggregatedDistribution(product_form(spec.load, table))


def blocking_from_distribution(probs: np.ndarray, demand: np.ndarray, N: int, window: int) -> float:
    """1 - sum over k<N of P_k(r) * P(demand <= window - r)."""
    R = probs.shape[1] - 1
    acc = np.zeros(R + 1)
    w = min(window, R)
    acc[: w + 1] = acceptance_table(demand, w)
    return float(1.0 - (probs[:N] @ acc).sum())


def baseline_metrics(dist: AggregatedDistribution, spec: BaselineSpec) -> BaselineMetrics:
    blocking = blocking_from_distribution(dist.probs, spec.demand, spec.N, spec.R)
    return BaselineMetrics(blocking=min(max(blocking, 0.0), 1.0), mean_resources=dist.mean_resources())


def erlang_b(C: int, load: float) -> float:
    """Erlang loss probability by the stable forward recursion."""
    if C < 1:
        raise DomainError("Erlang-B needs at least one server")
    if not load > 0:
        raise DomainError("offered load must be positive")
    e = 1.0
    for c in range(1, C + 1):
        e = load * e / (c + load * e)
    return e


def aggregate_flows(flows: FlowSpec) -> BaselineSpec:
    """Collapse several flows into one with the load-weighted demand mixture."""
    loads = np.array([c.load for c in flows.classes])
    total = loads.sum()
    if not total > 0:
        raise DomainError("aggregate load must be positive")
    width = max(c.demand.size for c in flows.classes)
    mix = np.zeros(width)
    for w, c in zip(loads / total, flows.classes):
        mix[: c.demand.size] += w * c.demand
    mix /= mix.sum()
    return BaselineSpec(servers=flows.servers, resources=flows.resources, load=float(total), demand=mix)


def per_flow_drop(dist: AggregatedDistribution, flows: FlowSpec, index: int) -> float:
    """Drop probability seen by arrivals of one class.

    The acceptance test for a class-l arrival in state (k, r) is k < N and
    demand <= R - r, so the inner term is a cumulative sum of the class pmf.
    """
    if not 0 <= index < len(flows.classes):
        raise DomainError(f"class index {index} out of range")
    demand = flows.classes[index].demand
    return blocking_from_distribution(dist.probs, demand, flows.servers, flows.resources)


@dataclass(frozen=True)
class RecursiveResult:
    G: np.ndarray
    blocking: float
    mean_resources: float


def normalization_recursive(spec: BaselineSpec) -> RecursiveResult:
    """Normalisation constants G(n, r) by the two-term recursion on n.

    G(n, r) = sum over k <= n of load**k / k! * P(sum of k demands <= r).
    The recursion only needs the demand pmf, never explicit convolutions.
    """
    N, R, rho = spec.N, spec.R, spec.load
    p = np.zeros(R + 1)
    n = min(spec.demand.size, R + 1)
    p[:n] = spec.demand[:n]
    cdf = np.cumsum(p)
    G = np.zeros((N + 1, R + 1))
    G[0] = 1.0
    G[1] = 1.0 + rho * cdf
    for m in range(2, N + 1):
        diff = G[m - 1] - G[m - 2]
        # sum_j p_j * diff[r - j] for every r at once
        G[m] = G[m - 1] + rho / m * np.convolve(p, diff)[: R + 1]
    total = G[N, R]
    blocking = 1.0 - float(p @ G[N - 1, ::-1]) / total
    mean_res = R - float(G[N, :R].sum()) / total
    return RecursiveResult(G=G, blocking=blocking, mean_resources=mean_res)


def multiclass_product_form(flows: FlowSpec) -> dict[tuple[int, ...], np.ndarray]:
    """Joint product form over per-class counts, indexed by the count tuple.

    Each value is the distribution of the total occupied units for that count
    vector, already multiplied by the normalised class weights.
    """
    N, R = flows.servers, flows.resources
    L = len(flows.classes)
    tables = [convolution_table(c.demand, N, R) for c in flows.classes]
    logs = [c.load for c in flows.classes]
    out: dict[tuple[int, ...], np.ndarray] = {}

    def rec(level, counts, remaining, conv, logw):
        if level == L:
            out[tuple(counts)] = np.exp(logw) * conv
            return
        for n in range(remaining + 1):
            nxt = np.convolve(conv, tables[level][n])[: R + 1]
            rec(level + 1, counts + [n], remaining - n, nxt,
                logw + n * math.log(logs[level]) - math.lgamma(n + 1))

    start = np.zeros(R + 1)
    start[0] = 1.0
    rec(0, [], N, start, 0.0)
    total = sum(v.sum() for v in out.values())
    return {k: v / total for k, v in out.items()}
