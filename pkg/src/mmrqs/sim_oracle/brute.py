"""Exact per-session chains, enumerated and solved directly.

Sessions are exchangeable, so a state stores the multiset of per-session
allocations (a sorted tuple) instead of an ordered vector.  That lumping is
exact; nothing else is aggregated.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable

import numpy as np

from ..errors import CapacityError, DomainError
from ..solvers import assemble, solve_stationary

STATE_CAP = 20_000


@dataclass(frozen=True)
class ChainSolution:
    states: list
    probs: np.ndarray

    def aggregate(self, key: Callable) -> dict:
        out: dict = {}
        for s, p in zip(self.states, self.probs):
            k = key(s)
            out[k] = out.get(k, 0.0) + p
        return out

    def expect(self, fn: Callable) -> float:
        return float(sum(p * fn(s) for s, p in zip(self.states, self.probs)))


def solve_chain(initial: Hashable, transitions: Callable[[Hashable], Iterable], cap: int = STATE_CAP) -> ChainSolution:
    """Breadth-first enumeration from ``initial`` followed by a direct solve."""
    index = {initial: 0}
    order = [initial]
    rows, cols, rates = [], [], []
    head = 0
    while head < len(order):
        s = order[head]
        for t, rate in transitions(s):
            if rate <= 0:
                continue
            j = index.get(t)
            if j is None:
                j = len(order)
                if j >= cap:
                    raise CapacityError(f"full chain exceeds the state cap of {cap}", count=j + 1)
                index[t] = j
                order.append(t)
            rows.append(head)
            cols.append(j)
            rates.append(rate)
        head += 1
    A = assemble(len(order), rows, cols, rates)
    q = solve_stationary(A, dense_limit=max(2000, len(order) + 1))
    return ChainSolution(states=order, probs=q)


def _insert(ms: tuple, v: int) -> tuple:
    return tuple(sorted(ms + (v,)))


def _remove(ms: tuple, v: int) -> tuple:
    lst = list(ms)
    lst.remove(v)
    return tuple(lst)


def _support(p) -> list[tuple[int, float]]:
    return [(int(j), float(p[j])) for j in np.flatnonzero(np.asarray(p) > 0)]


def multiclass_chain(servers: int, resources: int, classes, cap: int = STATE_CAP) -> ChainSolution:
    """``classes``: sequence of (arrival_rate, service_rate, demand pmf).

    A state is one sorted allocation tuple per class.
    """
    sup = [_support(c[2]) for c in classes]
    L = len(classes)

    def moves(state):
        n = sum(len(ms) for ms in state)
        used = sum(sum(ms) for ms in state)
        for l, (lam, mu, _) in enumerate(classes):
            if n < servers:
                for j, pj in sup[l]:
                    if used + j <= resources:
                        nxt = list(state)
                        nxt[l] = _insert(state[l], j)
                        yield tuple(nxt), lam * pj
            for v, c in Counter(state[l]).items():
                nxt = list(state)
                nxt[l] = _remove(state[l], v)
                yield tuple(nxt), c * mu
    return solve_chain(tuple(() for _ in range(L)), moves, cap)


def signals_chain(servers: int, resources: int, arrival_rate: float, service_rate: float,
                  signal_rate: float, demand, reservation_limit: int | None = None,
                  redraw=None, cap: int = STATE_CAP) -> ChainSolution:
    """Per-session chain of the signals model; arrivals see ``reservation_limit`` units."""
    R0 = resources if reservation_limit is None else reservation_limit
    sup = _support(demand)
    rsup = _support(demand if redraw is None else redraw)

    def moves(ms):
        n, used = len(ms), sum(ms)
        if n < servers:
            for j, pj in sup:
                if used + j <= R0:
                    yield _insert(ms, j), arrival_rate * pj
        for v, c in Counter(ms).items():
            gone = _remove(ms, v)
            yield gone, c * service_rate
            if signal_rate == 0:
                continue
            lost = 1.0
            for j, pj in rsup:
                if j <= resources - used + v:
                    lost -= pj
                    if j != v:
                        yield _insert(gone, j), c * signal_rate * pj
            if lost > 1e-15:
                yield gone, c * signal_rate * lost
    return solve_chain((), moves, cap)


def priority_chain(servers: int, resources: int, high, low, cap: int = STATE_CAP) -> ChainSolution:
    """Two classes with pre-emptive priority of ``high`` = (lam, mu, pmf).

    A high arrival that does not fit interrupts low sessions chosen uniformly
    at random, one at a time, until it fits.  State is (high multiset, low multiset).
    """
    hs, ls = _support(high[2]), _support(low[2])
    lam1, mu1 = high[0], high[1]
    lam2, mu2 = low[0], low[1]

    def evict(low_ms, n_cap, r_cap):
        # distribution of the low multiset after random interruptions
        out: dict = {}
        stack = [(low_ms, 1.0)]
        while stack:
            ms, w = stack.pop()
            if len(ms) <= n_cap and sum(ms) <= r_cap:
                out[ms] = out.get(ms, 0.0) + w
                continue
            for v, c in Counter(ms).items():
                stack.append((_remove(ms, v), w * c / len(ms)))
        return out

    def moves(state):
        h, lo = state
        n1, r1 = len(h), sum(h)
        n2, r2 = len(lo), sum(lo)
        if n1 < servers:
            for j, pj in hs:
                if r1 + j <= resources:
                    nh = _insert(h, j)
                    for nl, w in evict(lo, servers - n1 - 1, resources - r1 - j).items():
                        yield (nh, nl), lam1 * pj * w
        if n1 + n2 < servers:
            for j, pj in ls:
                if r1 + r2 + j <= resources:
                    yield (h, _insert(lo, j)), lam2 * pj
        for v, c in Counter(h).items():
            yield (_remove(h, v), lo), c * mu1
        for v, c in Counter(lo).items():
            yield (h, _remove(lo, v)), c * mu2
    return solve_chain(((), ()), moves, cap)


def elastic_chain(arrival_rate: float, service_rate: float, coefficients, probs,
                  servers: int, cap: int = STATE_CAP) -> ChainSolution:
    """Processor sharing with per-session rate coefficients.

    A state is the sorted tuple of coefficient indices; a session with
    coefficient v among n leaves at rate service_rate * v / n.
    """
    coefficients = list(coefficients)
    sup = [(i, float(p)) for i, p in enumerate(probs) if p > 0]

    def moves(ms):
        n = len(ms)
        if n < servers:
            for i, pi in sup:
                yield _insert(ms, i), arrival_rate * pi
        for i, c in Counter(ms).items():
            yield _remove(ms, i), c * service_rate * coefficients[i] / n
    if servers < 1:
        raise DomainError("servers must be positive")
    return solve_chain((), moves, cap)
