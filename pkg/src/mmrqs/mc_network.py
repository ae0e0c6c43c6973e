"""Multiconnectivity network of base stations with reservation.

Each node serves primary sessions (arriving from its own users, admitted
only within the first ``R0`` units) and secondary sessions (rerouted from
other nodes after a signal, admitted anywhere within ``R1``).  A session
leaves a node at rate ``mu + alpha``; if the departure was caused by a
signal it is rerouted uniformly to one of the other ``K - 1`` nodes.

The network is decomposed into independent nodes coupled only through the
secondary arrival intensities, which are found by fixed-point iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import DomainError, NonConvergenceError
from .rqs_core import acceptance_table, as_pmf, convolution_table
from .solvers import assemble, solve_stationary

PRIMARY, SECONDARY = 0, 1


@dataclass(frozen=True)
class BsNode:
    servers: int
    resources: int
    arrival_rate: float
    service_rate: float
    signal_rate: float
    demand_primary: np.ndarray
    demand_secondary: np.ndarray
    reservation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "demand_primary", as_pmf(self.demand_primary))
        object.__setattr__(self, "demand_secondary", as_pmf(self.demand_secondary))
        if self.servers < 1 or self.resources < 0:
            raise DomainError("invalid servers/resources")
        if self.arrival_rate < 0 or not self.service_rate > 0 or self.signal_rate < 0:
            raise DomainError("invalid node rates")
        if not 0.0 <= self.reservation < 1.0:
            raise DomainError("reservation must lie in [0,1)")

    @property
    def R1(self) -> int:
        return self.resources

    @property
    def R0(self) -> int:
        return int(math.floor((1.0 - self.reservation) * self.resources + 1e-12))

    @property
    def leave_rate(self) -> float:
        return self.service_rate + self.signal_rate


@dataclass(frozen=True)
class NetworkSpec:
    nodes: tuple[BsNode, ...]
    tol: float = 1e-8
    max_iterations: int = 200
    max_level: int = 50
    beta_method: str = "approx"

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(self.nodes) < 2:
            raise DomainError("a network needs K >= 2 nodes; use the single-station "
                              "reservation model (rqs_dynamics) for one base station")
        mus = {n.service_rate for n in self.nodes}
        if len(mus) != 1:
            raise DomainError("all nodes must share one service rate")

    @property
    def K(self) -> int:
        return len(self.nodes)


class _Convolutions:
    """Cached truncated convolution powers of both demand pmfs of a node."""

    def __init__(self, node: BsNode):
        self.p0 = self._pad(node.demand_primary, node.R1)
        self.p1 = self._pad(node.demand_secondary, node.R1)
        self.c0 = convolution_table(node.demand_primary, node.servers, node.R1)
        self.c1 = convolution_table(node.demand_secondary, node.servers, node.R1)

    @staticmethod
    def _pad(p, R):
        out = np.zeros(R + 1)
        n = min(p.size, R + 1)
        out[:n] = p[:n]
        return out


def _mixed_mass(conv: _Convolutions, n1: int, n2: int, r: int, R0: int) -> float:
    """P(primaries total <= R0 and overall total == r) under independence."""
    top = min(r, R0)
    i = np.arange(top + 1)
    return float(conv.c0[n1, i] @ conv.c1[n2, r - i])


def node_state_space(node: BsNode, conv: _Convolutions | None = None) -> list[tuple[int, int, int]]:
    conv = conv or _Convolutions(node)
    out = []
    for n in range(node.servers + 1):
        for n1 in range(n + 1):
            n2 = n - n1
            for r in range(node.R1 + 1):
                if _mixed_mass(conv, n1, n2, r, node.R0) > 0:
                    out.append((n1, n2, r))
    return out


def _beta_truncated(conv, cls, n1, n2, r, R0):
    denom = _mixed_mass(conv, n1, n2, r, R0)
    if denom <= 0:
        raise DomainError(f"state ({n1}, {n2}, {r}) has zero mass")
    beta = np.zeros(r + 1)
    for j in range(r + 1):
        if cls == PRIMARY:
            if conv.p0[j] == 0 or j > R0:
                continue
            top = min(r - j, R0 - j)
            i = np.arange(top + 1)
            beta[j] = conv.p0[j] * float(conv.c0[n1 - 1, i] @ conv.c1[n2, r - j - i])
        else:
            if conv.p1[j] == 0:
                continue
            top = min(r - j, R0)
            i = np.arange(top + 1)
            beta[j] = conv.p1[j] * float(conv.c0[n1, i] @ conv.c1[n2 - 1, r - j - i])
    return beta / denom


def _beta_ordered(conv, cls, n1, n2, r, R0):
    """Release probabilities accounting for the arrival order of the classes.

    All C(n1+n2, n1) interleavings are equally likely.  When the latest
    primary is preceded by s secondaries, the primaries together with those s
    secondaries must fit into R0; the remaining secondaries are unconstrained.
    """
    if n1 == 0:
        return _beta_truncated(conv, cls, n1, n2, r, R0)
    c0, c1, p0, p1 = conv.c0, conv.c1, conv.p0, conv.p1
    top = min(r, R0)
    denom = 0.0
    beta = np.zeros(r + 1)
    for s in range(n2 + 1):
        w = math.comb(n1 - 1 + s, n1 - 1)
        head = np.convolve(c0[n1], c1[s])[: r + 1]
        tail = c1[n2 - s]
        a = np.arange(top + 1)
        denom += w * float(head[a] @ tail[r - a])
        for j in range(r + 1):
            if cls == PRIMARY:
                if p0[j] == 0 or j > top:
                    continue
                rest = np.convolve(c0[n1 - 1], c1[s])[: r + 1]
                a2 = np.arange(j, top + 1)
                beta[j] += w * p0[j] * float(rest[a2 - j] @ tail[r - a2])
            else:
                if p1[j] == 0:
                    continue
                # the released secondary is among the first s with probability s/n2
                if s > 0:
                    rest = np.convolve(c0[n1], c1[s - 1])[: r + 1]
                    a2 = np.arange(j, top + 1)
                    beta[j] += w * (s / n2) * p1[j] * float(rest[a2 - j] @ tail[r - a2])
                if s < n2:
                    a2 = np.arange(0, min(top, r - j) + 1)
                    beta[j] += w * ((n2 - s) / n2) * p1[j] * float(head[a2] @ c1[n2 - s - 1, r - j - a2])
    if denom <= 0:
        raise DomainError(f"state ({n1}, {n2}, {r}) has zero mass")
    return beta / denom


def beta_release(node: BsNode, cls: int, n1: int, n2: int, r: int,
                 method: str = "approx", conv: _Convolutions | None = None) -> np.ndarray:
    """Distribution of units freed when a session of ``cls`` leaves state (n1, n2, r).

    ``approx`` ignores arrival order (exact whenever r <= R0); ``exact``
    averages over the arrival interleavings and is limited to n1 + n2 <= 8.
    """
    if cls not in (PRIMARY, SECONDARY):
        raise DomainError("class must be PRIMARY (0) or SECONDARY (1)")
    if (n1 if cls == PRIMARY else n2) < 1:
        raise DomainError("no session of the requested class in this state")
    conv = conv or _Convolutions(node)
    if method == "approx" or r <= node.R0:
        return _beta_truncated(conv, cls, n1, n2, r, node.R0)
    if method != "exact":
        raise DomainError(f"unknown release method {method!r}")
    if n1 + n2 > 8:
        raise DomainError("ordered release probabilities are limited to 8 sessions")
    return _beta_ordered(conv, cls, n1, n2, r, node.R0)


@dataclass(frozen=True)
class NodeDistribution:
    states: list
    probs: np.ndarray

    def marginal_primary(self) -> dict:
        """Distribution over (n1, r) after summing out the secondaries."""
        out: dict = {}
        for (n1, n2, r), p in zip(self.states, self.probs):
            out[(n1, r)] = out.get((n1, r), 0.0) + p
        return out


def node_generator(node: BsNode, secondary_rate: float, method: str = "approx"):
    conv = _Convolutions(node)
    states = node_state_space(node, conv)
    idx = {s: i for i, s in enumerate(states)}
    N, R0, R1 = node.servers, node.R0, node.R1
    lam, phi, leave = node.arrival_rate, secondary_rate, node.leave_rate
    rows, cols, rates = [], [], []
    for (n1, n2, r), s in idx.items():
        if n1 + n2 < N:
            if lam > 0:
                for j in range(0, R0 - r + 1):
                    t = idx.get((n1 + 1, n2, r + j))
                    if conv.p0[j] > 0 and t is not None:
                        rows.append(s); cols.append(t); rates.append(lam * conv.p0[j])
            if phi > 0:
                for j in range(0, R1 - r + 1):
                    t = idx.get((n1, n2 + 1, r + j))
                    if conv.p1[j] > 0 and t is not None:
                        rows.append(s); cols.append(t); rates.append(phi * conv.p1[j])
        for cls, n in ((PRIMARY, n1), (SECONDARY, n2)):
            if n == 0:
                continue
            beta = beta_release(node, cls, n1, n2, r, method, conv)
            for j in np.flatnonzero(beta > 0):
                j = int(j)
                tgt = (n1 - 1, n2, r - j) if cls == PRIMARY else (n1, n2 - 1, r - j)
                rows.append(s); cols.append(idx[tgt]); rates.append(n * leave * beta[j])
    return assemble(len(states), rows, cols, rates), states


def node_stationary(node: BsNode, secondary_rate: float, method: str = "approx") -> NodeDistribution:
    if secondary_rate < 0:
        raise DomainError("secondary intensity must be nonnegative")
    A, states = node_generator(node, secondary_rate, method)
    return NodeDistribution(states=states, probs=solve_stationary(A))


@dataclass(frozen=True)
class NodeMetrics:
    blocking: float
    secondary_blocking: float
    mean_sessions: float
    mean_resources: float


def node_metrics(dist: NodeDistribution, node: BsNode) -> NodeMetrics:
    N, R0, R1 = node.servers, node.R0, node.R1
    acc0 = np.zeros(R1 + 1)
    acc0[: R0 + 1] = acceptance_table(node.demand_primary, R0)
    acc1 = acceptance_table(node.demand_secondary, R1)
    ok0 = ok1 = n_mean = r_mean = 0.0
    for (n1, n2, r), p in zip(dist.states, dist.probs):
        n_mean += (n1 + n2) * p
        r_mean += r * p
        if n1 + n2 < N:
            ok0 += p * acc0[r]
            ok1 += p * acc1[r]
    clip = lambda x: min(max(x, 0.0), 1.0)
    return NodeMetrics(clip(1.0 - ok0), clip(1.0 - ok1), n_mean, r_mean)


def secondary_intensities(network: NetworkSpec, blocking: Sequence[float],
                          secondary_blocking: Sequence[float], level_tol: float = 1e-10):
    """Secondary arrival intensity per node, summed over reroute levels.

    Returns (totals, levels) where ``levels[v-1]`` holds the level-v vector.
    """
    K = network.K
    mu = network.nodes[0].service_rate
    a = np.array([n.signal_rate / (mu + n.signal_rate) for n in network.nodes])
    lam = np.array([n.arrival_rate for n in network.nodes])
    pb = np.asarray(blocking, dtype=float)
    ps = np.asarray(secondary_blocking, dtype=float)
    route = (np.ones((K, K)) - np.eye(K)) / (K - 1)
    bound = float(np.max((1 - ps) * a))
    if bound >= 1:
        raise DomainError("secondary level series is not summable")
    level = (lam * (1 - pb) * a) @ route
    levels = [level]
    total = level.copy()
    for _ in range(2, network.max_level + 1):
        level = (level * (1 - ps) * a) @ route
        if np.all(level <= level_tol * np.maximum(total, 1e-300)):
            break
        levels.append(level)
        total = total + level
    return total, levels


@dataclass(frozen=True)
class NetworkReport:
    blocking: float
    secondary_blocking: float
    ongoing_drop: float
    secondary_rates: np.ndarray
    nodes: tuple[NodeMetrics, ...]
    iterations: int
    mean_resources: float = field(default=0.0)


def _network_pair(network, metrics, phi):
    lam = np.array([n.arrival_rate for n in network.nodes])
    pb = float(sum(l * m.blocking for l, m in zip(lam, metrics)) / lam.sum())
    tot = phi.sum()
    ps = float(sum(f * m.secondary_blocking for f, m in zip(phi, metrics)) / tot) if tot > 0 else 0.0
    return pb, ps


def network_solve(network: NetworkSpec) -> NetworkReport:
    """Fixed point over the secondary intensities, starting from zero."""
    K = network.K
    phi = np.zeros(K)
    prev = None
    lam_total = sum(n.arrival_rate for n in network.nodes)
    for it in range(1, network.max_iterations + 1):
        metrics = [node_metrics(node_stationary(n, f, network.beta_method), n)
                   for n, f in zip(network.nodes, phi)]
        pair = _network_pair(network, metrics, phi)
        new_phi, _ = secondary_intensities(network, [m.blocking for m in metrics],
                                           [m.secondary_blocking for m in metrics])
        converged = prev is not None and max(abs(pair[0] - prev[0]), abs(pair[1] - prev[1])) < network.tol
        if np.allclose(new_phi, 0.0) and np.allclose(phi, 0.0):
            converged = True
        if converged:
            pb, ps = pair
            accepted = lam_total * (1 - pb)
            ongoing = phi.sum() * ps / accepted if accepted > 0 else 0.0
            return NetworkReport(blocking=pb, secondary_blocking=ps, ongoing_drop=ongoing,
                                 secondary_rates=phi, nodes=tuple(metrics), iterations=it,
                                 mean_resources=float(sum(m.mean_resources for m in metrics)))
        prev = pair
        phi = new_phi
    raise NonConvergenceError(f"network fixed point did not converge in {network.max_iterations} iterations",
                              iterations=network.max_iterations, last={"phi": phi, "pair": prev})


def exact_beta_enumeration(node: BsNode, cls: int, n1: int, n2: int, r: int) -> np.ndarray:
    """Brute-force oracle: enumerate interleavings and per-session demands.

    Only meant for tiny states; cost grows as (support size)**(n1+n2).
    """
    from itertools import product
    p0, p1 = node.demand_primary, node.demand_secondary
    sup0 = [j for j in range(p0.size) if p0[j] > 0]
    sup1 = [j for j in range(p1.size) if p1[j] > 0]
    n = n1 + n2
    beta = np.zeros(r + 1)
    total = 0.0
    for prim_pos in combinations(range(n), n1):
        kinds = [PRIMARY if i in prim_pos else SECONDARY for i in range(n)]
        last = max(prim_pos) if prim_pos else -1
        supports = [sup0 if k == PRIMARY else sup1 for k in kinds]
        for alloc in product(*supports):
            if sum(alloc) != r or sum(alloc[: last + 1]) > node.R0:
                continue
            w = 1.0
            for k, v in zip(kinds, alloc):
                w *= p0[v] if k == PRIMARY else p1[v]
            total += w
            members = [v for k, v in zip(kinds, alloc) if k == cls]
            for v in members:
                beta[v] += w / len(members)
    return beta / total
