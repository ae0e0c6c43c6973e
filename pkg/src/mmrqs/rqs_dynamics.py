"""Resource queuing system with per-session signals and resource reservation.

Every session in service receives Poisson signals.  A signal makes the
session release its units and draw a fresh demand; if the new demand does
not fit into what is free (plus what it just released) the session is lost.
With reservation, new arrivals only see the first ``R0 = floor((1-gamma) R)``
units while sessions already in service may use all ``R``.

Only the number of sessions and the total occupied units are tracked.  The
units released by a departing or signalled session are drawn from the
Bayesian posterior given the aggregated state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .rqs_core import acceptance_table, as_pmf, convolution_table
from .solvers import assemble, solve_stationary


@dataclass(frozen=True)
class SignalsSpec:
    """Model parameters.

    ``redraw`` optionally replaces the demand pmf used on a signal (e.g. a
    blocked-state pmf).  In that case the per-session allocation used for the
    Bayesian release step is the time-stationary mixture of the arrival and
    re-draw pmfs, with weights mu/(mu+alpha) and alpha/(mu+alpha).
    """

    servers: int
    resources: int
    arrival_rate: float
    service_rate: float
    signal_rate: float
    demand: np.ndarray
    reservation: float = 0.0
    redraw: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "demand", as_pmf(self.demand))
        if self.redraw is not None:
            object.__setattr__(self, "redraw", as_pmf(self.redraw))
        if self.servers < 1 or self.resources < 0:
            raise DomainError("invalid servers/resources")
        if self.arrival_rate < 0 or not self.service_rate > 0:
            raise DomainError("arrival rate must be nonnegative and service rate positive")
        if self.signal_rate < 0:
            raise DomainError("signal rate must be nonnegative")
        if not 0.0 <= self.reservation < 1.0:
            raise DomainError("reservation must lie in [0,1)")

    @property
    def admission_limit(self) -> int:
        """Units visible to new arrivals."""
        return int(math.floor((1.0 - self.reservation) * self.resources + 1e-12))

    @property
    def redraw_pmf(self) -> np.ndarray:
        return self.demand if self.redraw is None else self.redraw

    @property
    def allocation_pmf(self) -> np.ndarray:
        if self.redraw is None:
            return self.demand
        a, b = self.demand, self.redraw
        width = max(a.size, b.size)
        w = self.signal_rate / (self.service_rate + self.signal_rate)
        mix = (1 - w) * np.pad(a, (0, width - a.size)) + w * np.pad(b, (0, width - b.size))
        return mix / mix.sum()


@dataclass(frozen=True)
class StateSpace:
    states: tuple[tuple[int, int], ...]
    index: dict
    table: np.ndarray  # convolution powers of the allocation pmf

    def __len__(self):
        return len(self.states)

    def group(self, k: int) -> list[tuple[int, int]]:
        return [s for s in self.states if s[0] == k]


def build_state_space(spec: SignalsSpec) -> StateSpace:
    table = convolution_table(spec.allocation_pmf, spec.servers, spec.resources)
    states = tuple((k, r) for k in range(spec.servers + 1)
                   for r in range(spec.resources + 1) if table[k, r] > 0)
    return StateSpace(states=states, index={s: i for i, s in enumerate(states)}, table=table)


def release_probabilities(k: int, r: int, spec: SignalsSpec, table: np.ndarray | None = None) -> np.ndarray:
    """theta_i(k, r) for i = 0..r: units held by a uniformly chosen session."""
    if k < 1:
        raise DomainError("release probabilities need at least one session")
    if table is None:
        table = convolution_table(spec.allocation_pmf, k, r)
    if r >= table.shape[1] or table[k, r] <= 0:
        raise DomainError(f"state ({k}, {r}) has zero probability mass")
    p = spec.allocation_pmf
    i = np.arange(r + 1)
    pi = np.zeros(r + 1)
    n = min(p.size, r + 1)
    pi[:n] = p[:n]
    theta = pi * table[k - 1, r - i] / table[k, r]
    return theta / theta.sum()


@dataclass(frozen=True)
class SparseGenerator:
    matrix: object
    space: StateSpace


def build_generator(spec: SignalsSpec) -> SparseGenerator:
    space = build_state_space(spec)
    idx = space.index
    N, R, R0 = spec.servers, spec.resources, spec.admission_limit
    lam, mu, alpha = spec.arrival_rate, spec.service_rate, spec.signal_rate
    p = spec.demand
    q = spec.redraw_pmf
    qcdf = np.cumsum(q)
    pos = np.full((N + 1, R + 1), -1, dtype=np.int64)
    for (k, r), s in idx.items():
        pos[k, r] = s
    arr_j = np.flatnonzero(p > 0)
    sig_j = np.flatnonzero(q > 0)
    rows, cols, rates = [], [], []

    def add(a, b, rate):
        # targets whose convolution weight underflowed to zero carry no mass
        b, rate = np.ravel(b), np.broadcast_to(rate, np.shape(b)).ravel()
        live = b >= 0
        rows.append(np.broadcast_to(a, b.shape)[live])
        cols.append(b[live])
        rates.append(rate[live])

    for (k, r), s in idx.items():
        if k < N and lam > 0:
            j = arr_j[arr_j <= R0 - r]
            add(s, pos[k + 1, r + j], lam * p[j])
        if k == 0:
            continue
        theta = release_probabilities(k, r, spec, space.table)
        i = np.flatnonzero(theta > 0)
        add(s, pos[k - 1, r - i], k * mu * theta[i])
        if alpha == 0:
            continue
        room = R - r + i
        # a signal re-draws j; it fits when j <= room
        jj = sig_j[None, :]
        ok = (jj <= room[:, None]) & (jj != i[:, None])
        ii, jsel = np.nonzero(ok)
        add(s, pos[k, r - i[ii] + sig_j[jsel]], k * alpha * theta[i[ii]] * q[sig_j[jsel]])
        top = np.minimum(q.size - 1, room)
        lost = 1.0 - np.where(top >= 0, qcdf[np.maximum(top, 0)], 0.0)
        keep = lost > 1e-15
        add(s, pos[k - 1, r - i[keep]], k * alpha * theta[i[keep]] * lost[keep])
    rows, cols, rates = (np.concatenate(v) if v else np.zeros(0) for v in (rows, cols, rates))
    A = assemble(len(space), rows, cols, rates)
    return SparseGenerator(matrix=A, space=space)


@dataclass(frozen=True)
class StationaryDistribution:
    """Probabilities keyed by the states of ``space``."""

    probs: np.ndarray
    space: StateSpace

    def as_grid(self, N: int, R: int) -> np.ndarray:
        grid = np.zeros((N + 1, R + 1))
        for (k, r), v in zip(self.space.states, self.probs):
            grid[k, r] = v
        return grid


def solve(gen: SparseGenerator, **kwargs) -> StationaryDistribution:
    return StationaryDistribution(probs=solve_stationary(gen.matrix, **kwargs), space=gen.space)


@dataclass(frozen=True)
class DynamicsMetrics:
    blocking: float
    mean_resources: float
    mean_sessions: float
    drop_rate: float
    ongoing_drop: float
    admitted: bool = True


def dynamics_metrics(Q: StationaryDistribution, spec: SignalsSpec) -> DynamicsMetrics:
    """New-session drop, mean occupancy and the ongoing-session drop.

    The drop intensity weights each state by its number of sessions: each of
    the k sessions receives signals at rate alpha independently.
    """
    N, R, R0 = spec.servers, spec.resources, spec.admission_limit
    grid = Q.as_grid(N, R)
    acc = np.zeros(R + 1)
    acc[: R0 + 1] = acceptance_table(spec.demand, R0)
    blocking = float(1.0 - (grid[:N] @ acc).sum())
    blocking = min(max(blocking, 0.0), 1.0)
    mean_res = float(grid.sum(axis=0) @ np.arange(R + 1))
    mean_n = float(grid.sum(axis=1) @ np.arange(N + 1))
    nu = 0.0
    if spec.signal_rate > 0:
        qcdf = np.cumsum(spec.redraw_pmf)
        for (k, r), prob in zip(Q.space.states, Q.probs):
            if k == 0 or prob == 0:
                continue
            theta = release_probabilities(k, r, spec, Q.space.table)
            room = R - r + np.arange(r + 1)
            fit = qcdf[np.minimum(room, qcdf.size - 1)]
            nu += k * prob * float(theta @ np.maximum(1.0 - fit, 0.0))
        nu *= spec.signal_rate
    accepted = spec.arrival_rate * (1.0 - blocking)
    if accepted <= 0:
        return DynamicsMetrics(blocking, mean_res, mean_n, nu, 0.0, admitted=False)
    return DynamicsMetrics(blocking, mean_res, mean_n, nu, nu / accepted)


def solve_signals(spec: SignalsSpec) -> tuple[StationaryDistribution, DynamicsMetrics]:
    Q = solve(build_generator(spec))
    return Q, dynamics_metrics(Q, spec)
