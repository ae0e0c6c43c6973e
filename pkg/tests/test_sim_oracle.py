import io
import json

import numpy as np
import pytest

from mmrqs.errors import CapacityError, DomainError
from mmrqs.rqs_core import BaselineSpec, FlowClass, baseline_metrics, baseline_stationary, erlang_b
from mmrqs.rqs_dynamics import SignalsSpec, solve_signals
from mmrqs.service_variants import (AdaptiveSpec, ElasticSpec, PrioritySpec, adaptive_metrics,
                                    adaptive_stationary, elastic_metrics, elastic_stationary,
                                    solve_priority)
from mmrqs.sim_oracle.brute import elastic_chain, multiclass_chain, signals_chain, solve_chain
from mmrqs.sim_oracle.des import METRICS, SimConfig, simulate, stream

SMALL = SimConfig(seed=7, measured_events=200_000)


def test_brute_single_server_single_unit():
    sol = multiclass_chain(1, 1, [(1.0, 1.0, [0, 1])])
    np.testing.assert_allclose(sorted(sol.probs), [0.5, 0.5], atol=1e-14)


def test_brute_signals_matches_aggregated_small_case():
    # with N=2, R=3 and a two-point demand the only lost redraws are from full states
    p = [0, 0.5, 0.5]
    Q, m = solve_signals(SignalsSpec(2, 3, 1.0, 1.0, 0.7, p))
    sol = signals_chain(2, 3, 1.0, 1.0, 0.7, p)
    grid = np.zeros((3, 4))
    for ms, v in zip(sol.states, sol.probs):
        grid[len(ms), sum(ms)] += v
    assert np.abs(Q.as_grid(2, 3) - grid).max() < 1e-9


def test_brute_capacity_error():
    with pytest.raises(CapacityError) as info:
        multiclass_chain(30, 60, [(5.0, 1.0, [0, 0.3, 0.3, 0.4])], cap=500)
    assert "500" in str(info.value)


def test_solve_chain_two_state():
    sol = solve_chain("a", lambda s: [("b", 2.0)] if s == "a" else [("a", 3.0)])
    assert dict(zip(sol.states, sol.probs)) == pytest.approx({"a": 0.6, "b": 0.4})


def test_sim_config_validation():
    with pytest.raises(DomainError):
        SimConfig(seed=-1)
    with pytest.raises(DomainError):
        SimConfig(batch_count=5)
    with pytest.raises(DomainError):
        SimConfig(measured_events=100, batch_count=30)
    assert SimConfig(measured_events=1000).warmup == 100


def test_streams_are_distinct_and_reproducible():
    a = stream(5, 0).random(4)
    assert np.array_equal(a, stream(5, 0).random(4))
    assert not np.array_equal(a, stream(5, 1).random(4))


def test_same_seed_same_report():
    spec = SignalsSpec(5, 10, 3.0, 1.0, 0.5, [0, 0.3, 0.3, 0.4])
    cfg = SimConfig(seed=99, measured_events=20_000)
    assert simulate(spec, cfg).to_dict() == simulate(spec, cfg).to_dict()
    other = simulate(spec, SimConfig(seed=100, measured_events=20_000))
    assert other.to_dict() != simulate(spec, cfg).to_dict()


def test_no_arrivals_freezes_the_system():
    rep = simulate(SignalsSpec(3, 5, 0.0, 1.0, 0.5, [0, 0.5, 0.5]), SimConfig(measured_events=2000))
    assert rep.counts["arrivals"] == 0
    assert "blocking" in rep.undefined
    assert rep.metrics["mean_sessions"].value == 0.0


def test_erlang_within_three_sigma():
    rep = simulate(BaselineSpec(4, 4, 3.0, [0, 1]), SMALL)
    assert rep.within("blocking", erlang_b(4, 3.0))


def test_conservation_and_ranges():
    rep = simulate(SignalsSpec(6, 12, 5.0, 1.0, 0.8, [0, 0.2, 0.3, 0.3, 0.2], reservation=0.2), SMALL)
    c = rep.counts
    assert c["accepted"] + c["blocked"] == c["arrivals"]
    assert c["dropped_ongoing"] <= c["signals"]
    for name, e in rep.metrics.items():
        assert name in METRICS
        assert e.half_width >= 0 and e.std_error >= 0
    assert 0 <= rep.metrics["blocking"].value <= 1
    assert rep.metrics["mean_resources"].value <= 12


def test_trace_records():
    buf = io.StringIO()
    simulate(SignalsSpec(3, 5, 2.0, 1.0, 0.5, [0, 0.5, 0.5]), SimConfig(seed=3, measured_events=300), trace=buf)
    lines = [json.loads(x) for x in buf.getvalue().splitlines()]
    assert len(lines) == 330
    assert set(lines[0]) == {"t", "event", "node", "session", "units"}
    times = [x["t"] for x in lines]
    assert times == sorted(times)


def test_baseline_model_against_product_form():
    spec = BaselineSpec(5, 9, 3.0, [0, 0.4, 0.3, 0.3])
    m = baseline_metrics(baseline_stationary(spec), spec)
    rep = simulate(spec, SMALL)
    assert rep.within("blocking", m.blocking) and rep.within("mean_resources", m.mean_resources)


def test_priority_against_analytic():
    spec = PrioritySpec(6, 5, FlowClass(10.0, 20.0, [0, 0, 1]), FlowClass(2.0, 1.0, [0, 0.5, 0.1, 0.25, 0.15]))
    m = solve_priority(spec)
    rep = simulate(spec, SMALL)
    assert rep.within("high_blocking", m.high_blocking)
    assert rep.within("low_blocking", m.low_blocking)
    assert rep.within("interruption", m.interruption)


def test_adaptive_against_product_form():
    spec = AdaptiveSpec(20, 4, 3, (3.0, 1.0, 2), (4.0, 1.0, 3), mmwave_arrival_rate=10.0)
    m = adaptive_metrics(spec, adaptive_stationary(spec))
    rep = simulate(spec, SMALL)
    assert rep.within("blocking", m.blocking)
    assert rep.within("offloaded_blocking", m.offloaded_blocking)
    assert rep.within("mean_share_native", m.mean_share_native)


def test_elastic_against_analytic_and_full_chain():
    spec = ElasticSpec(2.0, 1.0, [0.5, 1.0, 2.0], [0.3, 0.4, 0.3], servers=8)
    m = elastic_metrics(spec, elastic_stationary(spec))
    rep = simulate(spec, SMALL)
    assert rep.within("blocking", m.blocking)
    assert rep.within("mean_sojourn", m.mean_sojourn)
    sol = elastic_chain(2.0, 1.0, spec.coefficients, spec.probs, 8)
    assert sol.expect(lambda ms: float(len(ms) == 8)) == pytest.approx(m.blocking, abs=1e-9)


def test_unknown_model_rejected():
    with pytest.raises(DomainError):
        simulate(object(), SMALL)
