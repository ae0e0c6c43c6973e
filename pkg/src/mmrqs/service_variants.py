"""Two-class pre-emptive priorities, adaptive offload, and elastic processor sharing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .rqs_core import (AggregatedDistribution, BaselineSpec, FlowClass, as_pmf,
                       baseline_stationary, blocking_from_distribution,
                       convolution_table)
from .solvers import assemble, solve_stationary


# --------------------------------------------------------------------------
# priorities

@dataclass(frozen=True)
class PrioritySpec:
    """``high`` pre-empts ``low``; both share N servers and R units."""

    servers: int
    resources: int
    high: FlowClass
    low: FlowClass

    def __post_init__(self):
        if self.servers < 1 or self.resources < 0:
            raise DomainError("invalid servers/resources")


def priority_high_marginal(spec: PrioritySpec) -> AggregatedDistribution:
    """The high class never notices the low one, so this is the baseline model."""
    h = spec.high
    if h.arrival_rate == 0:
        probs = np.zeros((spec.servers + 1, spec.resources + 1))
        probs[0, 0] = 1.0
        return AggregatedDistribution(probs)
    return baseline_stationary(BaselineSpec(spec.servers, spec.resources, h.load, h.demand))


@dataclass(frozen=True)
class LowMarginal:
    """Distribution of (low sessions, low units) plus the low-class rates.

    ``interrupted_rate`` is the long-run rate at which in-service low
    sessions are interrupted by high arrivals.
    """

    probs: np.ndarray
    low_blocking: float
    interrupted_rate: float
    method: str
    approximate: bool = True


def _padded(p: np.ndarray, R: int) -> np.ndarray:
    out = np.zeros(R + 1)
    n = min(p.size, R + 1)
    out[:n] = p[:n]
    return out


def _release_table(p: np.ndarray, table: np.ndarray) -> dict:
    N, R = table.shape[0] - 1, table.shape[1] - 1
    out = {}
    for n in range(1, N + 1):
        for r in range(R + 1):
            if table[n, r] > 0:
                i = np.arange(r + 1)
                th = p[: r + 1] * table[n - 1, r - i] / table[n, r]
                out[(n, r)] = th / th.sum()
    return out


def _removal_outcomes(theta: dict, N: int, R: int, A: int, B: int) -> np.ndarray:
    """Where uniformly random removals starting from each (m, s) first satisfy m <= A, s <= B.

    Returns an array indexed [m, s, m', s'].  ``theta[(m, s)]`` is the
    release distribution of the low class.
    """
    out = np.zeros((N + 1, R + 1, N + 1, R + 1))
    for m in range(N + 1):
        for s in range(R + 1):
            if (m, s) not in theta and (m, s) != (0, 0):
                continue
            if m <= A and s <= B:
                out[m, s, m, s] = 1.0
                continue
            th = theta[(m, s)]
            for i in np.flatnonzero(th > 0):
                out[m, s] += th[i] * out[m - 1, s - i]
    return out


class _Removals:
    def __init__(self, theta, N, R):
        self.theta, self.N, self.R = theta, N, R
        self.cache = {}

    def __call__(self, A, B, m, s) -> np.ndarray:
        if (A, B) not in self.cache:
            self.cache[(A, B)] = _removal_outcomes(self.theta, self.N, self.R, A, B)
        return self.cache[(A, B)][m, s]


def _low_joint(spec: PrioritySpec) -> LowMarginal:
    """Aggregated chain on (n1, r1, n2, r2) with Bayesian release for both classes."""
    N, R = spec.servers, spec.resources
    hi, lo = spec.high, spec.low
    p1, p2 = _padded(hi.demand, R), _padded(lo.demand, R)
    t1 = convolution_table(hi.demand, N, R)
    t2 = convolution_table(lo.demand, N, R)
    th1, th2 = _release_table(p1, t1), _release_table(p2, t2)
    removals = _Removals(th2, N, R)
    states = [(a, b, c, d) for a in range(N + 1) for b in range(R + 1) if t1[a, b] > 0
              for c in range(N + 1 - a) for d in range(R + 1 - b) if t2[c, d] > 0]
    idx = {st: k for k, st in enumerate(states)}
    j1, j2 = np.flatnonzero(p1 > 0), np.flatnonzero(p2 > 0)
    rows, cols, rates = [], [], []

    def add(src, target, rate):
        # states whose convolution weight underflowed are left out
        t = idx.get(target)
        if t is not None:
            rows.append(src); cols.append(t); rates.append(rate)
        return t is not None
    interrupted = np.zeros(len(states))
    refused = np.zeros(len(states))
    for (a, b, c, d), k in idx.items():
        if a < N and hi.arrival_rate > 0:
            for j in j1:
                if b + j > R:
                    continue
                A, B = N - a - 1, R - b - j
                if c <= A and d <= B:
                    add(k, (a + 1, b + j, c, d), hi.arrival_rate * p1[j])
                    continue
                dest = removals(A, B, c, d)
                for m, s in zip(*np.nonzero(dest)):
                    rate = hi.arrival_rate * p1[j] * dest[m, s]
                    if add(k, (a + 1, b + j, int(m), int(s)), rate):
                        interrupted[k] += rate * (c - m)
        for j in j2:
            if a + c < N and b + d + j <= R:
                add(k, (a, b, c + 1, d + j), lo.arrival_rate * p2[j])
            else:
                refused[k] += p2[j]
        if a > 0:
            th = th1[(a, b)]
            for i in np.flatnonzero(th > 0):
                rows.append(k); cols.append(idx[(a - 1, b - i, c, d)]); rates.append(a * hi.service_rate * th[i])
        if c > 0:
            th = th2[(c, d)]
            for i in np.flatnonzero(th > 0):
                rows.append(k); cols.append(idx[(a, b, c - 1, d - i)]); rates.append(c * lo.service_rate * th[i])
    q = solve_stationary(assemble(len(states), rows, cols, rates))
    probs = np.zeros((N + 1, R + 1))
    for (a, b, c, d), v in zip(states, q):
        probs[c, d] += v
    return LowMarginal(probs, float(min(max(q @ refused, 0.0), 1.0)), float(q @ interrupted), "joint",
                       approximate=True)


def _conditional_high(H: np.ndarray, n_cap: int, r_cap: int) -> np.ndarray:
    C = np.zeros_like(H)
    C[: n_cap + 1, : r_cap + 1] = H[: n_cap + 1, : r_cap + 1]
    return C / C.sum()


def _low_conditional(spec: PrioritySpec, H: np.ndarray) -> LowMarginal:
    """Reduced chain on (n2, r2) alone.

    While the low class holds (n2, r2), the high class is taken to follow its
    own stationary marginal conditioned on n1 <= N - n2 and r1 <= R - r2.
    """
    N, R = spec.servers, spec.resources
    lo, hi = spec.low, spec.high
    p1, p2 = _padded(hi.demand, R), _padded(lo.demand, R)
    table = convolution_table(lo.demand, N, R)
    states = [(n, r) for n in range(N + 1) for r in range(R + 1) if table[n, r] > 0]
    idx = {s: i for i, s in enumerate(states)}
    theta = _release_table(p2, table)
    removals = _Removals(theta, N, R)

    # weights of the (A, B) fitting thresholds seen by each high arrival
    W = np.zeros((len(states), N, R + 1))
    acceptance = np.zeros(len(states))
    rows, cols, rates = [], [], []
    for s_idx, (n2, r2) in enumerate(states):
        C = _conditional_high(H, N - n2, R - r2)
        if n2 < N:
            for j in np.flatnonzero(p2 > 0):
                if r2 + j <= R:
                    t = idx.get((n2 + 1, r2 + j))
                    if t is None:
                        continue
                    acc = p2[j] * C[: N - n2, : R - r2 - j + 1].sum()
                    acceptance[s_idx] += acc
                    rows.append(s_idx); cols.append(t); rates.append(lo.arrival_rate * acc)
        if n2 > 0:
            th = theta[(n2, r2)]
            for i in np.flatnonzero(th > 0):
                rows.append(s_idx); cols.append(idx[(n2 - 1, r2 - i)]); rates.append(n2 * lo.service_rate * th[i])
        if hi.arrival_rate == 0:
            continue
        for n1 in range(N):
            for r1 in range(R + 1):
                c = C[n1, r1]
                if c == 0:
                    continue
                for j in np.flatnonzero(p1[: R - r1 + 1] > 0):
                    W[s_idx, N - n1 - 1, R - r1 - j] += hi.arrival_rate * c * p1[j]

    interruption = np.zeros(len(states))
    for A in range(N):
        for B in range(R + 1):
            for s_idx, (n2, r2) in enumerate(states):
                w = W[s_idx, A, B]
                if w == 0 or (n2 <= A and r2 <= B):
                    continue
                dest = removals(A, B, n2, r2)
                for m, s in zip(*np.nonzero(dest)):
                    rows.append(s_idx); cols.append(idx[(int(m), int(s))]); rates.append(w * dest[m, s])
                    interruption[s_idx] += w * dest[m, s] * (n2 - m)
    q = solve_stationary(assemble(len(states), rows, cols, rates))
    probs = np.zeros((N + 1, R + 1))
    for (n, r), v in zip(states, q):
        probs[n, r] = v
    pb2 = min(max(1.0 - float(q @ acceptance), 0.0), 1.0)
    return LowMarginal(probs, pb2, float(q @ interruption), "conditional",
                       approximate=hi.arrival_rate > 0)


def priority_low_marginal(spec: PrioritySpec, high: AggregatedDistribution | None = None,
                          method: str = "joint") -> LowMarginal:
    """Low-class marginal.

    ``joint`` solves the aggregated chain of both classes; the only
    approximation is that units freed by an interrupted or departing low
    session follow the Bayesian release distribution.  ``conditional``
    solves a chain on the low class alone, replacing the high class by its
    marginal conditioned on the residual capacity; it is cheaper and
    noticeably rougher.  High arrivals that do not fit interrupt low
    sessions chosen uniformly at random until they fit.
    """
    if method == "joint":
        return _low_joint(spec)
    if method == "conditional":
        H = (high or priority_high_marginal(spec)).probs
        return _low_conditional(spec, H)
    raise DomainError(f"unknown priority method {method!r}")


@dataclass(frozen=True)
class PriorityMetrics:
    high_blocking: float
    low_blocking: float
    interruption: float
    approximate: bool = True
    mean_resources: float = math.nan


def priority_metrics(spec: PrioritySpec, high: AggregatedDistribution, low: LowMarginal) -> PriorityMetrics:
    h = spec.high
    pb1 = blocking_from_distribution(high.probs, h.demand, spec.servers, spec.resources)
    pb1 = min(max(pb1, 0.0), 1.0)
    accepted = spec.low.arrival_rate * (1.0 - low.low_blocking)
    pint = low.interrupted_rate / accepted if accepted > 0 else 0.0
    low_units = float(low.probs.sum(axis=0) @ np.arange(low.probs.shape[1]))
    return PriorityMetrics(pb1, low.low_blocking, pint, low.approximate,
                           high.mean_resources() + low_units)


def solve_priority(spec: PrioritySpec, method: str = "joint") -> PriorityMetrics:
    high = priority_high_marginal(spec)
    return priority_metrics(spec, high, priority_low_marginal(spec, high, method))


# --------------------------------------------------------------------------
# adaptive offload at an anchor base station

@dataclass(frozen=True)
class AdaptiveSpec:
    """Anchor station with R units, R1 reserved for native and R2 for offloaded sessions."""

    resources: int
    reserved_native: int
    reserved_offloaded: int
    native: tuple[float, float, int]     # (arrival rate, service rate, minimum units)
    offloaded: tuple[float, float, int]
    mmwave_arrival_rate: float = 0.0

    def __post_init__(self):
        R, R1, R2 = self.resources, self.reserved_native, self.reserved_offloaded
        if min(R1, R2) < 0 or R1 + R2 >= R:
            raise DomainError("reserved volumes must be nonnegative with R1 + R2 < R")
        for lam, mu, x in (self.native, self.offloaded):
            if lam < 0 or not mu > 0 or x < 1:
                raise DomainError("invalid class parameters")

    @property
    def caps(self) -> tuple[int, int]:
        R, R1, R2 = self.resources, self.reserved_native, self.reserved_offloaded
        return (R - R2) // self.native[2], (R - R1) // self.offloaded[2]


@dataclass(frozen=True)
class AdaptiveDistribution:
    probs: np.ndarray  # [k1, k2]; zero outside the admissible set

    def admissible(self, spec: AdaptiveSpec) -> np.ndarray:
        return _adaptive_mask(spec)


def _adaptive_mask(spec: AdaptiveSpec) -> np.ndarray:
    K1, K2 = spec.caps
    x1, x2 = spec.native[2], spec.offloaded[2]
    k1 = np.arange(K1 + 1)[:, None]
    k2 = np.arange(K2 + 1)[None, :]
    return k1 * x1 + k2 * x2 <= spec.resources


def adaptive_stationary(spec: AdaptiveSpec) -> AdaptiveDistribution:
    K1, K2 = spec.caps
    rho1 = spec.native[0] / spec.native[1]
    rho2 = spec.offloaded[0] / spec.offloaded[1]
    k1 = np.arange(K1 + 1)
    k2 = np.arange(K2 + 1)

    def logterm(rho, k):
        if rho == 0:
            return np.where(k == 0, 0.0, -np.inf)
        return k * math.log(rho) - np.array([math.lgamma(v + 1) for v in k])

    logw = logterm(rho1, k1)[:, None] + logterm(rho2, k2)[None, :]
    mask = _adaptive_mask(spec)
    logw = np.where(mask, logw, -np.inf)
    w = np.exp(logw - np.max(logw))
    return AdaptiveDistribution(w / w.sum())


def adaptive_balance_residual(spec: AdaptiveSpec, dist: AdaptiveDistribution) -> float:
    """Largest violation of the global balance equations by ``dist``."""
    K1, K2 = spec.caps
    (l1, m1, x1), (l2, m2, x2) = spec.native, spec.offloaded
    R = spec.resources
    Q = dist.probs
    mask = _adaptive_mask(spec)

    def ok1(a, b):
        return a < K1 and (a + 1) * x1 + b * x2 <= R

    def ok2(a, b):
        return b < K2 and a * x1 + (b + 1) * x2 <= R

    worst = 0.0
    for a in range(K1 + 1):
        for b in range(K2 + 1):
            if not mask[a, b]:
                continue
            out = Q[a, b] * (l1 * ok1(a, b) + l2 * ok2(a, b) + a * m1 + b * m2)
            inn = 0.0
            if a > 0:
                inn += l1 * Q[a - 1, b]
            if b > 0:
                inn += l2 * Q[a, b - 1]
            if ok1(a, b):
                inn += (a + 1) * m1 * Q[a + 1, b]
            if ok2(a, b):
                inn += (b + 1) * m2 * Q[a, b + 1]
            worst = max(worst, abs(out - inn))
    return worst


def equal_share(spec: AdaptiveSpec, k1: int, k2: int) -> tuple[float, float]:
    """Per-session units of each class in state (k1, k2).

    Each class present receives its reserved volume; the unreserved rest is
    split equally per session.  A class pushed below its minimum is topped up
    from the other class, and no class exceeds R minus the other's reserve.
    """
    R, R1, R2 = spec.resources, spec.reserved_native, spec.reserved_offloaded
    x1, x2 = spec.native[2], spec.offloaded[2]
    n = k1 + k2
    if n == 0:
        return 0.0, 0.0
    rest = R - R1 - R2
    s1 = min(R - R2, R1 + rest * k1 / n) if k1 else 0.0
    s2 = min(R - R1, R2 + rest * k2 / n) if k2 else 0.0
    if k1 and s1 < k1 * x1:
        s1 = k1 * x1
        if k2:
            s2 = min(R - R1, R - s1)
    if k2 and s2 < k2 * x2:
        s2 = k2 * x2
        if k1:
            s1 = min(R - R2, R - s2)
    return (s1 / k1 if k1 else 0.0), (s2 / k2 if k2 else 0.0)


@dataclass(frozen=True)
class AdaptiveMetrics:
    blocking: float
    drop_rate: float
    ongoing_drop: float
    mean_share_native: float
    mean_share_offloaded: float
    offloaded_blocking: float
    mean_resources: float


def adaptive_metrics(spec: AdaptiveSpec, dist: AdaptiveDistribution) -> AdaptiveMetrics:
    K1, K2 = spec.caps
    x1, x2 = spec.native[2], spec.offloaded[2]
    R = spec.resources
    Q = dist.probs
    mask = _adaptive_mask(spec)
    k1 = np.arange(K1 + 1)[:, None]
    k2 = np.arange(K2 + 1)[None, :]
    used = k1 * x1 + k2 * x2
    block1 = mask & ((k1 == K1) | (used > R - x1))
    block2 = mask & ((k2 == K2) | (used > R - x2))
    pb = float(Q[block1].sum())
    pb2 = float(Q[block2].sum())
    nu = spec.offloaded[0] * pb2
    if spec.mmwave_arrival_rate > 0:
        pt = nu / spec.mmwave_arrival_rate
    elif nu > 0:
        raise DomainError("ongoing drop needs the total mmWave arrival rate")
    else:
        pt = 0.0
    tot1 = tot2 = w1 = w2 = occupied = 0.0
    for a in range(K1 + 1):
        for b in range(K2 + 1):
            if not mask[a, b] or Q[a, b] == 0:
                continue
            r1, r2 = equal_share(spec, a, b)
            tot1 += Q[a, b] * a * r1
            tot2 += Q[a, b] * b * r2
            w1 += Q[a, b] * a
            w2 += Q[a, b] * b
            occupied += Q[a, b] * (a * x1 + b * x2)
    return AdaptiveMetrics(pb, nu, pt, tot1 / w1 if w1 else 0.0, tot2 / w2 if w2 else 0.0,
                           pb2, occupied)


# --------------------------------------------------------------------------
# elastic sessions under processor sharing

@dataclass(frozen=True)
class ElasticSpec:
    """Processor sharing with a random rate coefficient per session.

    Either ``servers`` or ``min_rate`` fixes the session cap; with
    ``min_rate`` it is the largest N such that v_1 / N >= min_rate.
    """

    arrival_rate: float
    service_rate: float
    coefficients: Sequence[float]
    probs: Sequence[float]
    servers: int | None = None
    min_rate: float | None = None

    def __post_init__(self):
        v = np.asarray(self.coefficients, dtype=float)
        p = as_pmf(self.probs)
        if v.size != p.size or np.any(v <= 0) or np.any(np.diff(v) <= 0):
            raise DomainError("coefficients must be positive, strictly increasing and match the pmf")
        object.__setattr__(self, "coefficients", v)
        object.__setattr__(self, "probs", p)
        if self.servers is None:
            if self.min_rate is None or not self.min_rate > 0:
                raise DomainError("give either servers or a positive min_rate")
            object.__setattr__(self, "servers", int(math.floor(v[0] / self.min_rate + 1e-12)))
        if self.servers < 1:
            raise DomainError("session cap must be at least 1")
        if self.arrival_rate < 0 or not self.service_rate > 0:
            raise DomainError("invalid rates")


def _key(u: float) -> float:
    return round(u, 9)


def _sum_distributions(v: np.ndarray, w: np.ndarray, N: int) -> list[dict]:
    """dist[n][u]: P(sum of n iid coefficients drawn from w equals u)."""
    out = [{0.0: 1.0}]
    for _ in range(N):
        nxt: dict = {}
        for u, pu in out[-1].items():
            for vl, pl in zip(v, w):
                if pl > 0:
                    k = _key(u + vl)
                    nxt[k] = nxt.get(k, 0.0) + pu * pl
        out.append(nxt)
    return out


@dataclass(frozen=True)
class ElasticDistribution:
    states: list  # (n, u)
    probs: np.ndarray


def elastic_stationary(spec: ElasticSpec, release: str = "size_biased") -> ElasticDistribution:
    """Stationary distribution over (sessions, sum of coefficients).

    In state (n, u) the total departure rate is mu * u / n.  Which coefficient
    leaves is inferred from the aggregated state.  ``size_biased`` weights the
    composition posterior by p_v / v (sessions with small coefficients stay
    longer) and lets a coefficient-v session leave at rate mu * v / n, which
    lumps the per-session chain exactly.  ``bayes`` uses the plain posterior on
    p_v with the total rate split accordingly.
    """
    v, p, N = spec.coefficients, spec.probs, spec.servers
    lam, mu = spec.arrival_rate, spec.service_rate
    if release == "size_biased":
        comp = p / v
        comp = comp / comp.sum()
    elif release == "bayes":
        comp = p
    else:
        raise DomainError(f"unknown release rule {release!r}")
    arrivals = _sum_distributions(v, p, N)
    composition = _sum_distributions(v, comp, N)
    states = [(n, u) for n in range(N + 1) for u in sorted(arrivals[n]) if arrivals[n][u] > 0]
    idx = {s: i for i, s in enumerate(states)}
    rows, cols, rates = [], [], []
    for (n, u), s in idx.items():
        if n < N and lam > 0:
            for vl, pl in zip(v, p):
                if pl > 0:
                    rows.append(s); cols.append(idx[(n + 1, _key(u + vl))]); rates.append(lam * pl)
        if n == 0:
            continue
        denom = composition[n][u]
        for vl, cl in zip(v, comp):
            prev = composition[n - 1].get(_key(u - vl), 0.0)
            if cl == 0 or prev == 0:
                continue
            theta = cl * prev / denom
            rate = mu * vl * theta if release == "size_biased" else mu * u / n * theta
            rows.append(s); cols.append(idx[(n - 1, _key(u - vl))]); rates.append(rate)
    q = solve_stationary(assemble(len(states), rows, cols, rates))
    return ElasticDistribution(states=states, probs=q)


@dataclass(frozen=True)
class ElasticMetrics:
    blocking: float
    mean_sessions: float
    mean_sojourn: float | None


def elastic_metrics(spec: ElasticSpec, dist: ElasticDistribution) -> ElasticMetrics:
    N = spec.servers
    n = np.array([s[0] for s in dist.states])
    pi = float(dist.probs[n == N].sum())
    mean_n = float(n @ dist.probs)
    accepted = spec.arrival_rate * (1 - pi)
    sojourn = mean_n / accepted if accepted > 0 else None
    return ElasticMetrics(pi, mean_n, sojourn)
