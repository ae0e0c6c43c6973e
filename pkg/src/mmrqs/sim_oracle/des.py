"""Event-driven simulation of every queue model with batch-means confidence intervals.

All clocks are exponential, so the next event is found by racing the total
rate of the current state and then picking which clock fired.  Sessions are
kept individually with their true allocations; nothing is aggregated.

Random numbers come from Philox generators, one stream per purpose, keyed by
(seed, stream id).  Draws are fetched in blocks and handed out one by one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import IO, Iterator

import numpy as np
from scipy import stats

from ..errors import DomainError
from ..mc_network import NetworkSpec
from ..rqs_core import BaselineSpec
from ..rqs_dynamics import SignalsSpec
from ..service_variants import AdaptiveSpec, ElasticSpec, PrioritySpec, equal_share

BLOCK = 1 << 16

METRICS = {
    "blocking": "new-session drop probability",
    "ongoing_drop": "ongoing-session drop probability",
    "secondary_blocking": "drop probability of rerouted sessions",
    "high_blocking": "drop probability of the high-priority class",
    "low_blocking": "drop probability of the low-priority class",
    "interruption": "interrupted fraction of accepted low-priority sessions",
    "offloaded_blocking": "drop probability of offloaded sessions",
    "drop_rate": "ongoing-session drops per second",
    "mean_share_native": "mean units per native session",
    "mean_share_offloaded": "mean units per offloaded session",
    "mean_resources": "mean occupied units",
    "mean_sessions": "mean number of sessions",
    "mean_sojourn": "mean sojourn time of accepted sessions",
}


@dataclass(frozen=True)
class SimConfig:
    seed: int = 1
    measured_events: int = 1_000_000
    warmup_events: int | None = None
    batch_count: int = 30

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.batch_count < 10:
            raise DomainError("batch_count must be at least 10")
        if self.measured_events < 10 * self.batch_count:
            raise DomainError("measured_events must be at least 10 * batch_count")
        if self.warmup_events is not None and self.warmup_events < 0:
            raise DomainError("warmup_events must be nonnegative")

    @property
    def warmup(self) -> int:
        return self.measured_events // 10 if self.warmup_events is None else self.warmup_events


@dataclass(frozen=True)
class Estimate:
    value: float
    half_width: float
    std_error: float
    batches: int


@dataclass(frozen=True)
class SimReport:
    model: str
    metrics: dict
    counts: dict
    config: dict
    simulated_time: float
    undefined: tuple = field(default_factory=tuple)

    def within(self, name: str, analytic: float, sigmas: float = 3.0) -> bool:
        e = self.metrics[name]
        return abs(e.value - analytic) <= sigmas * e.std_error + 1e-12

    def to_dict(self) -> dict:
        return {"model": self.model, "metrics": {k: asdict(v) for k, v in self.metrics.items()},
                "counts": dict(self.counts), "config": dict(self.config),
                "simulated_time": self.simulated_time, "undefined": list(self.undefined)}


# ---------------------------------------------------------------------------
# random streams

def stream(seed: int, stream_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream_id,))))


def _blocks(gen: np.random.Generator, draw) -> Iterator:
    while True:
        yield from draw(gen, BLOCK).tolist()


class _Streams:
    def __init__(self, seed: int):
        self.seed = seed
        self.next_id = 0

    def _gen(self):
        g = stream(self.seed, self.next_id)
        self.next_id += 1
        return g

    def exponential(self):
        return _blocks(self._gen(), lambda g, n: g.standard_exponential(n)).__next__

    def uniform(self):
        return _blocks(self._gen(), lambda g, n: g.random(n)).__next__

    def pmf(self, p):
        p = np.asarray(p, dtype=float)
        p = p / p.sum()
        return _blocks(self._gen(), lambda g, n: g.choice(p.size, size=n, p=p)).__next__


# ---------------------------------------------------------------------------
# batch bookkeeping

class _Recorder:
    """Snapshots of cumulative counters at the warmup end and each batch end."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        B, M = cfg.batch_count, cfg.measured_events
        self.marks = [cfg.warmup + (M * b) // B for b in range(B + 1)]
        self.snaps: list[dict] = []

    def mark(self, snap: dict) -> int:
        self.snaps.append(snap)
        k = len(self.snaps)
        return self.marks[k] if k < len(self.marks) else -1


def _summarize(rec: _Recorder, ratios: dict, state_values: dict) -> tuple[dict, tuple]:
    """Per-batch ratios of counter increments turned into batch-means estimates.

    ``ratios`` maps a metric to (numerator key, denominator key, scale).
    When the system froze before any batch completed, time averages fall back
    to the frozen state values and event ratios are undefined.
    """
    B = rec.cfg.batch_count
    out, undefined = {}, []
    snaps = rec.snaps
    tq = stats.t.ppf(0.975, B - 1)
    for name, (num, den, scale) in ratios.items():
        if len(snaps) < B + 1:
            if name in state_values:
                out[name] = Estimate(float(state_values[name]), 0.0, 0.0, 0)
            else:
                undefined.append(name)
            continue
        vals = []
        for a, b in zip(snaps[:-1], snaps[1:]):
            d = b[den] - a[den]
            if d <= 0:
                break
            vals.append(scale * (b[num] - a[num]) / d)
        if len(vals) < B:
            undefined.append(name)
            continue
        v = np.asarray(vals)
        se = float(v.std(ddof=1) / math.sqrt(B))
        out[name] = Estimate(float(v.mean()), float(tq * se), se, B)
    return out, tuple(undefined)


def _report(model, rec, ratios, state_values, counts, cfg, t):
    metrics, undefined = _summarize(rec, ratios, state_values)
    return SimReport(model=model, metrics=metrics, counts=counts,
                     config={"seed": cfg.seed, "warmup_events": cfg.warmup,
                             "measured_events": cfg.measured_events, "batch_count": cfg.batch_count},
                     simulated_time=t, undefined=undefined)


class _Trace:
    def __init__(self, sink: IO | None):
        self.sink = sink

    def __call__(self, t, kind, node, sid, units):
        self.sink.write(json.dumps({"t": t, "event": kind, "node": node, "session": sid,
                                    "units": units}) + "\n")


def _check(cond: bool, what: str):
    if not cond:
        raise AssertionError(what)


# ---------------------------------------------------------------------------
# single station with signals and reservation (baseline when there are no signals)

def _sim_signals(N, R, R0, lam, mu, alpha, demand, redraw, cfg, trace, model):
    rs = _Streams(cfg.seed)
    expo, unif, draw, redraw_ = rs.exponential(), rs.uniform(), rs.pmf(demand), rs.pmf(redraw)
    S: list[int] = []
    ids: list[int] = []
    r = 0
    t = area_r = area_n = 0.0
    arrivals = accepted = blocked = departures = signals = drops = 0
    leave = mu + alpha
    rec = _Recorder(cfg)
    total = rec.marks[-1]
    nxt = rec.marks[0]
    ev = 0

    def snap():
        return {"t": t, "ar": area_r, "an": area_n, "arr": arrivals, "blk": blocked,
                "acc": accepted, "drop": drops}

    if nxt == 0:
        nxt = rec.mark(snap())
    while ev < total:
        n = len(S)
        rate = lam + n * leave
        if rate <= 0:
            break
        dt = expo() / rate
        area_r += r * dt
        area_n += n * dt
        t += dt
        x = unif() * rate
        if x < lam:
            arrivals += 1
            j = draw()
            if n < N and r + j <= R0:
                S.append(j)
                r += j
                accepted += 1
                if trace:
                    ids.append(arrivals)
                    trace(t, "accept", 0, arrivals, j)
            else:
                blocked += 1
                if trace:
                    trace(t, "block", 0, arrivals, j)
        else:
            y = (x - lam) / leave
            i = min(int(y), n - 1)
            d = S[i]
            if (y - i) * leave < mu:
                departures += 1
                gone = True
                kind = "depart"
            else:
                signals += 1
                j = redraw_()
                if r - d + j <= R:
                    S[i] = j
                    r += j - d
                    gone = False
                    if trace:
                        trace(t, "signal", 0, ids[i], j)
                else:
                    drops += 1
                    gone = True
                    kind = "drop"
            if gone:
                r -= d
                last = S.pop()
                if i < n - 1:
                    S[i] = last
                if trace:
                    sid = ids[i]
                    lid = ids.pop()
                    if i < n - 1:
                        ids[i] = lid
                    trace(t, kind, 0, sid, d)
        _check(r <= R, "occupied units exceed capacity")
        ev += 1
        if ev == nxt:
            nxt = rec.mark(snap())
    _check(accepted + blocked == arrivals, "arrival conservation")
    _check(accepted - departures - drops == len(S), "session conservation")
    ratios = {"blocking": ("blk", "arr", 1.0), "mean_resources": ("ar", "t", 1.0),
              "mean_sessions": ("an", "t", 1.0)}
    if alpha > 0:
        ratios["ongoing_drop"] = ("drop", "acc", 1.0)
        ratios["drop_rate"] = ("drop", "t", 1.0)
    counts = {"events": ev, "arrivals": arrivals, "accepted": accepted, "blocked": blocked,
              "departures": departures, "signals": signals, "dropped_ongoing": drops}
    return _report(model, rec, ratios, {"mean_resources": r, "mean_sessions": len(S)}, counts, cfg, t)


# ---------------------------------------------------------------------------
# multiconnectivity network with rerouting

def _sim_network(net: NetworkSpec, cfg, trace):
    rs = _Streams(cfg.seed)
    expo, unif, pick = rs.exponential(), rs.uniform(), rs.uniform()
    K = net.K
    nodes = net.nodes
    lam = [nd.arrival_rate for nd in nodes]
    mu = [nd.service_rate for nd in nodes]
    leave = [nd.leave_rate for nd in nodes]
    R0 = [nd.R0 for nd in nodes]
    R1 = [nd.R1 for nd in nodes]
    N = [nd.servers for nd in nodes]
    draw0 = [rs.pmf(nd.demand_primary) for nd in nodes]
    draw1 = [rs.pmf(nd.demand_secondary) for nd in nodes]
    S: list[list[int]] = [[] for _ in range(K)]
    ids: list[list[int]] = [[] for _ in range(K)]
    r = [0] * K
    area_r = [0.0] * K
    t = area_n = 0.0
    arrivals = accepted = blocked = departures = reroutes = rblocked = 0
    rec = _Recorder(cfg)
    total, nxt, ev = rec.marks[-1], rec.marks[0], 0
    lam_total = sum(lam)

    def snap():
        return {"t": t, "ar": sum(area_r), "an": area_n, "arr": arrivals, "blk": blocked,
                "acc": accepted, "rr": reroutes, "rblk": rblocked}

    if nxt == 0:
        nxt = rec.mark(snap())
    while ev < total:
        rate = lam_total
        n_all = 0
        for k in range(K):
            nk = len(S[k])
            rate += nk * leave[k]
            n_all += nk
        if rate <= 0:
            break
        dt = expo() / rate
        for k in range(K):
            area_r[k] += r[k] * dt
        area_n += n_all * dt
        t += dt
        x = unif() * rate
        for k in range(K):
            if x < lam[k]:
                arrivals += 1
                j = draw0[k]()
                if len(S[k]) < N[k] and r[k] + j <= R0[k]:
                    S[k].append(j)
                    r[k] += j
                    accepted += 1
                    if trace:
                        ids[k].append(arrivals)
                        trace(t, "accept", k, arrivals, j)
                else:
                    blocked += 1
                    if trace:
                        trace(t, "block", k, arrivals, j)
                break
            x -= lam[k]
            nk = len(S[k])
            w = nk * leave[k]
            if x < w:
                y = x / leave[k]
                i = min(int(y), nk - 1)
                d = S[k][i]
                r[k] -= d
                last = S[k].pop()
                if i < nk - 1:
                    S[k][i] = last
                sid = None
                if trace:
                    sid = ids[k][i]
                    lid = ids[k].pop()
                    if i < nk - 1:
                        ids[k][i] = lid
                if (y - i) * leave[k] < mu[k]:
                    departures += 1
                    if trace:
                        trace(t, "depart", k, sid, d)
                    break
                # signal: try exactly one other node, chosen uniformly
                reroutes += 1
                m = min(int(pick() * (K - 1)), K - 2)
                m = m if m < k else m + 1
                j = draw1[m]()
                if len(S[m]) < N[m] and r[m] + j <= R1[m]:
                    S[m].append(j)
                    r[m] += j
                    _check(r[m] <= R1[m], "occupied units exceed capacity")
                    if trace:
                        ids[m].append(sid)
                        trace(t, "reroute", m, sid, j)
                else:
                    rblocked += 1
                    if trace:
                        trace(t, "drop", m, sid, j)
                break
            x -= w
        ev += 1
        if ev == nxt:
            nxt = rec.mark(snap())
    _check(accepted + blocked == arrivals, "arrival conservation")
    _check(accepted - departures - rblocked == sum(len(s) for s in S), "session conservation")
    ratios = {"blocking": ("blk", "arr", 1.0), "secondary_blocking": ("rblk", "rr", 1.0),
              "ongoing_drop": ("rblk", "acc", 1.0), "mean_resources": ("ar", "t", 1.0),
              "mean_sessions": ("an", "t", 1.0)}
    counts = {"events": ev, "arrivals": arrivals, "accepted": accepted, "blocked": blocked,
              "departures": departures, "reroutes": reroutes, "dropped_ongoing": rblocked}
    return _report("network", rec, ratios, {"mean_resources": sum(r),
                                            "mean_sessions": sum(len(s) for s in S)}, counts, cfg, t)


# ---------------------------------------------------------------------------
# pre-emptive priority

def _sim_priority(spec: PrioritySpec, cfg, trace):
    rs = _Streams(cfg.seed)
    expo, unif, pick = rs.exponential(), rs.uniform(), rs.uniform()
    N, R = spec.servers, spec.resources
    lam1, mu1 = spec.high.arrival_rate, spec.high.service_rate
    lam2, mu2 = spec.low.arrival_rate, spec.low.service_rate
    draw1, draw2 = rs.pmf(spec.high.demand), rs.pmf(spec.low.demand)
    H: list[int] = []
    L: list[int] = []
    r1 = r2 = 0
    t = area_r = area_n = 0.0
    a1 = acc1 = blk1 = a2 = acc2 = blk2 = dep1 = dep2 = interrupted = 0
    rec = _Recorder(cfg)
    total, nxt, ev = rec.marks[-1], rec.marks[0], 0

    def snap():
        return {"t": t, "ar": area_r, "an": area_n, "a1": a1, "b1": blk1, "a2": a2, "b2": blk2,
                "acc2": acc2, "int": interrupted}

    if nxt == 0:
        nxt = rec.mark(snap())
    lam = lam1 + lam2
    while ev < total:
        n1, n2 = len(H), len(L)
        rate = lam + n1 * mu1 + n2 * mu2
        if rate <= 0:
            break
        dt = expo() / rate
        area_r += (r1 + r2) * dt
        area_n += (n1 + n2) * dt
        t += dt
        x = unif() * rate
        if x < lam1:
            a1 += 1
            j = draw1()
            if n1 < N and r1 + j <= R:
                H.append(j)
                r1 += j
                acc1 += 1
                while n1 + 1 + len(L) > N or r1 + r2 > R:
                    nl = len(L)
                    i = min(int(pick() * nl), nl - 1)
                    d = L[i]
                    last = L.pop()
                    if i < nl - 1:
                        L[i] = last
                    r2 -= d
                    interrupted += 1
                    if trace:
                        trace(t, "interrupt", 0, None, d)
                if trace:
                    trace(t, "accept_high", 0, a1, j)
            else:
                blk1 += 1
        elif x < lam:
            a2 += 1
            j = draw2()
            if n1 + n2 < N and r1 + r2 + j <= R:
                L.append(j)
                r2 += j
                acc2 += 1
                if trace:
                    trace(t, "accept_low", 0, a2, j)
            else:
                blk2 += 1
        else:
            x -= lam
            if x < n1 * mu1:
                i = min(int(x / mu1), n1 - 1)
                d = H[i]
                last = H.pop()
                if i < n1 - 1:
                    H[i] = last
                r1 -= d
                dep1 += 1
                if trace:
                    trace(t, "depart_high", 0, None, d)
            else:
                i = min(int((x - n1 * mu1) / mu2), n2 - 1)
                d = L[i]
                last = L.pop()
                if i < n2 - 1:
                    L[i] = last
                r2 -= d
                dep2 += 1
                if trace:
                    trace(t, "depart_low", 0, None, d)
        _check(r1 + r2 <= R and len(H) + len(L) <= N, "capacity exceeded")
        ev += 1
        if ev == nxt:
            nxt = rec.mark(snap())
    _check(acc1 + blk1 == a1 and acc2 + blk2 == a2, "arrival conservation")
    _check(acc2 - dep2 - interrupted == len(L) and acc1 - dep1 == len(H), "session conservation")
    ratios = {"high_blocking": ("b1", "a1", 1.0), "low_blocking": ("b2", "a2", 1.0),
              "interruption": ("int", "acc2", 1.0), "mean_resources": ("ar", "t", 1.0),
              "mean_sessions": ("an", "t", 1.0)}
    counts = {"events": ev, "arrivals_high": a1, "arrivals_low": a2, "accepted_high": acc1,
              "accepted_low": acc2, "blocked_high": blk1, "blocked_low": blk2,
              "interrupted": interrupted, "arrivals": a1 + a2, "accepted": acc1 + acc2,
              "blocked": blk1 + blk2}
    return _report("priority", rec, ratios, {"mean_resources": r1 + r2,
                                             "mean_sessions": len(H) + len(L)}, counts, cfg, t)


# ---------------------------------------------------------------------------
# adaptive offload with equal sharing of the unreserved units

def _sim_adaptive(spec: AdaptiveSpec, cfg, trace):
    rs = _Streams(cfg.seed)
    expo, unif = rs.exponential(), rs.uniform()
    (lam1, mu1, x1), (lam2, mu2, x2) = spec.native, spec.offloaded
    K1, K2 = spec.caps
    R = spec.resources
    shares: dict = {}
    # per-session allocations, recomputed whenever the population changes
    alloc1: list[float] = []
    alloc2: list[float] = []
    k1 = k2 = 0
    t = area_r = area_s1 = area_s2 = area_k1 = area_k2 = 0.0
    a1 = b1 = a2 = b2 = d1 = d2 = 0
    rec = _Recorder(cfg)
    total, nxt, ev = rec.marks[-1], rec.marks[0], 0

    def snap():
        return {"t": t, "ar": area_r, "s1": area_s1, "s2": area_s2, "k1": area_k1, "k2": area_k2,
                "a1": a1, "b1": b1, "a2": a2, "b2": b2}

    def reshare():
        key = (k1, k2)
        if key not in shares:
            shares[key] = equal_share(spec, k1, k2)
        s1, s2 = shares[key]
        alloc1[:] = [s1] * k1
        alloc2[:] = [s2] * k2
        _check(sum(alloc1) + sum(alloc2) <= R + 1e-9, "shares exceed capacity")

    if nxt == 0:
        nxt = rec.mark(snap())
    lam = lam1 + lam2
    while ev < total:
        rate = lam + k1 * mu1 + k2 * mu2
        if rate <= 0:
            break
        dt = expo() / rate
        area_r += (k1 * x1 + k2 * x2) * dt
        area_s1 += sum(alloc1) * dt
        area_s2 += sum(alloc2) * dt
        area_k1 += k1 * dt
        area_k2 += k2 * dt
        t += dt
        x = unif() * rate
        if x < lam1:
            a1 += 1
            if k1 < K1 and (k1 + 1) * x1 + k2 * x2 <= R:
                k1 += 1
            else:
                b1 += 1
        elif x < lam:
            a2 += 1
            if k2 < K2 and k1 * x1 + (k2 + 1) * x2 <= R:
                k2 += 1
            else:
                b2 += 1
        elif x < lam + k1 * mu1:
            k1 -= 1
            d1 += 1
        else:
            k2 -= 1
            d2 += 1
        reshare()
        if trace:
            trace(t, "state", 0, None, [k1, k2])
        ev += 1
        if ev == nxt:
            nxt = rec.mark(snap())
    _check(a1 - b1 - d1 == k1 and a2 - b2 - d2 == k2, "session conservation")
    ratios = {"blocking": ("b1", "a1", 1.0), "offloaded_blocking": ("b2", "a2", 1.0),
              "drop_rate": ("b2", "t", 1.0), "mean_resources": ("ar", "t", 1.0),
              "mean_share_native": ("s1", "k1", 1.0), "mean_share_offloaded": ("s2", "k2", 1.0)}
    if spec.mmwave_arrival_rate > 0:
        ratios["ongoing_drop"] = ("b2", "t", 1.0 / spec.mmwave_arrival_rate)
    counts = {"events": ev, "arrivals": a1 + a2, "arrivals_native": a1, "arrivals_offloaded": a2,
              "blocked": b1 + b2, "accepted": a1 + a2 - b1 - b2, "blocked_native": b1,
              "dropped_offloaded": b2}
    return _report("adaptive", rec, ratios, {"mean_resources": k1 * x1 + k2 * x2}, counts, cfg, t)


# ---------------------------------------------------------------------------
# elastic sessions under processor sharing

def _sim_elastic(spec: ElasticSpec, cfg, trace):
    rs = _Streams(cfg.seed)
    expo, unif, draw = rs.exponential(), rs.uniform(), rs.pmf(spec.probs)
    v = spec.coefficients.tolist()
    N, lam, mu = spec.servers, spec.arrival_rate, spec.service_rate
    S: list[float] = []
    born: list[float] = []
    u = 0.0
    t = area_n = sojourn = 0.0
    arrivals = accepted = blocked = done = 0
    rec = _Recorder(cfg)
    total, nxt, ev = rec.marks[-1], rec.marks[0], 0

    def snap():
        return {"t": t, "an": area_n, "arr": arrivals, "blk": blocked, "done": done, "soj": sojourn}

    if nxt == 0:
        nxt = rec.mark(snap())
    while ev < total:
        n = len(S)
        # the coefficient sum is recomputed to avoid drift
        u = math.fsum(S)
        rate = lam + (mu * u / n if n else 0.0)
        if rate <= 0:
            break
        dt = expo() / rate
        area_n += n * dt
        t += dt
        x = unif() * rate
        if x < lam:
            arrivals += 1
            c = v[draw()]
            if n < N:
                S.append(c)
                born.append(t)
                accepted += 1
                if trace:
                    trace(t, "accept", 0, arrivals, c)
            else:
                blocked += 1
        else:
            y = (x - lam) * n / mu
            i = 0
            while i < n - 1 and y >= S[i]:
                y -= S[i]
                i += 1
            sojourn += t - born[i]
            done += 1
            if trace:
                trace(t, "depart", 0, None, S[i])
            S.pop(i)
            born.pop(i)
        ev += 1
        if ev == nxt:
            nxt = rec.mark(snap())
    _check(accepted + blocked == arrivals and accepted - done == len(S), "conservation")
    ratios = {"blocking": ("blk", "arr", 1.0), "mean_sessions": ("an", "t", 1.0),
              "mean_sojourn": ("soj", "done", 1.0)}
    counts = {"events": ev, "arrivals": arrivals, "accepted": accepted, "blocked": blocked,
              "departures": done}
    return _report("elastic", rec, ratios, {"mean_sessions": len(S)}, counts, cfg, t)


# ---------------------------------------------------------------------------

def simulate(model, cfg: SimConfig | None = None, trace: IO | None = None) -> SimReport:
    """Simulate ``model`` and return batch-means estimates of its metrics.

    ``trace`` receives one JSON record per event (time, kind, node, session
    id, units) when given.  It slows the run down considerably.
    """
    cfg = cfg or SimConfig()
    tr = _Trace(trace) if trace is not None else None
    if isinstance(model, BaselineSpec):
        return _sim_signals(model.N, model.R, model.R, model.load, 1.0, 0.0, model.demand,
                            model.demand, cfg, tr, "baseline")
    if isinstance(model, SignalsSpec):
        kind = "reservation" if model.reservation > 0 else "signals"
        return _sim_signals(model.servers, model.resources, model.admission_limit, model.arrival_rate,
                            model.service_rate, model.signal_rate, model.demand, model.redraw_pmf,
                            cfg, tr, kind)
    if isinstance(model, NetworkSpec):
        return _sim_network(model, cfg, tr)
    if isinstance(model, PrioritySpec):
        return _sim_priority(model, cfg, tr)
    if isinstance(model, AdaptiveSpec):
        return _sim_adaptive(model, cfg, tr)
    if isinstance(model, ElasticSpec):
        return _sim_elastic(model, cfg, tr)
    raise DomainError(f"no simulator for {type(model).__name__}")
