import numpy as np
import pytest

from mmrqs.errors import DomainError, NonConvergenceError
from mmrqs.mc_network import (PRIMARY, SECONDARY, BsNode, NetworkSpec, beta_release,
                              exact_beta_enumeration, network_solve, node_metrics,
                              node_state_space, node_stationary, secondary_intensities)
from mmrqs.rqs_dynamics import SignalsSpec, solve_signals

P0 = [0, 0, 0.3, 0.4, 0.3]
P1 = [0, 0, 0, 0.2, 0.3, 0.3, 0.2]


def node(lam=4.0, alpha=0.3, **kw):
    args = dict(servers=10, resources=40, arrival_rate=lam, service_rate=1.0, signal_rate=alpha,
                demand_primary=P0, demand_secondary=P1, reservation=0.1)
    args.update(kw)
    return BsNode(**args)


def symmetric(K, **kw):
    return NetworkSpec(tuple(node(lam=12.0 / K) for _ in range(K)), **kw)


def test_single_node_rejected():
    with pytest.raises(DomainError, match="rqs_dynamics"):
        NetworkSpec((node(),))


def test_node_validation():
    with pytest.raises(DomainError):
        node(reservation=1.0)
    with pytest.raises(DomainError):
        NetworkSpec((node(), node(service_rate=2.0)))


def test_exact_release_matches_enumeration():
    small = BsNode(4, 9, 1.0, 1.0, 0.5, [0, 0.5, 0.5], [0, 0, 0.6, 0.4], reservation=0.4)
    assert small.R0 == 5
    checked = 0
    for n1, n2, r in node_state_space(small):
        if r <= small.R0 or n1 + n2 > 4:
            continue
        for cls, n in ((PRIMARY, n1), (SECONDARY, n2)):
            if n == 0:
                continue
            got = beta_release(small, cls, n1, n2, r, method="exact")
            ref = exact_beta_enumeration(small, cls, n1, n2, r)
            assert np.abs(got - ref).max() < 1e-12
            checked += 1
    assert checked > 5


def test_approx_release_exact_below_admission_limit():
    small = BsNode(4, 9, 1.0, 1.0, 0.5, [0, 0.5, 0.5], [0, 0, 0.6, 0.4], reservation=0.4)
    ref = exact_beta_enumeration(small, PRIMARY, 2, 1, 5)
    got = beta_release(small, PRIMARY, 2, 1, 5, method="approx")
    assert np.abs(got - ref).max() < 1e-12


def test_release_errors():
    n = node()
    with pytest.raises(DomainError):
        beta_release(n, PRIMARY, 0, 1, 4)
    with pytest.raises(DomainError):
        beta_release(n, 2, 1, 1, 4)


def test_node_distribution_normalized():
    dist = node_stationary(node(), 0.8)
    assert dist.probs.sum() == pytest.approx(1.0, abs=1e-9)
    assert dist.probs.min() >= -1e-15
    assert sum(dist.marginal_primary().values()) == pytest.approx(1.0, abs=1e-9)


def test_equal_windows_equal_blocking():
    n = node(reservation=0.0, demand_secondary=P0)
    m = node_metrics(node_stationary(n, 0.5), n)
    assert m.blocking == pytest.approx(m.secondary_blocking, abs=1e-14)


def test_light_load_blocking():
    n = BsNode(3, 5, 1e-9, 1.0, 0.1, [0, 0.5, 0.2, 0.2, 0.1], [0, 1], reservation=0.4)
    m = node_metrics(node_stationary(n, 0.0), n)
    assert n.R0 == 3
    assert m.blocking == pytest.approx(0.1, abs=1e-7)


def test_no_signals_reduces_to_reservation_model():
    nodes = (node(lam=3.0, alpha=0.0), node(lam=5.0, alpha=0.0))
    rep = network_solve(NetworkSpec(nodes))
    assert rep.iterations == 1
    assert np.all(rep.secondary_rates == 0)
    for n, m in zip(nodes, rep.nodes):
        _, ref = solve_signals(SignalsSpec(n.servers, n.resources, n.arrival_rate, 1.0, 0.0,
                                           n.demand_primary, reservation=n.reservation))
        assert m.blocking == pytest.approx(ref.blocking, abs=1e-10)


def test_level_one_intensities_by_hand():
    nodes = (node(lam=2.0, alpha=0.2), node(lam=3.0, alpha=0.5), node(lam=4.0, alpha=1.0))
    net = NetworkSpec(nodes)
    pb, ps = [0.1, 0.2, 0.3], [0.05, 0.1, 0.15]
    _, levels = secondary_intensities(net, pb, ps)
    out = [2.0 * 0.9 * 0.2 / 1.2, 3.0 * 0.8 * 0.5 / 1.5, 4.0 * 0.7 * 1.0 / 2.0]
    want = [(out[1] + out[2]) / 2, (out[0] + out[2]) / 2, (out[0] + out[1]) / 2]
    np.testing.assert_allclose(levels[0], want, rtol=0, atol=1e-12)
    assert all(np.all(lv >= 0) for lv in levels)


def test_zero_signal_intensities_vanish():
    net = NetworkSpec((node(alpha=0.0), node(alpha=0.0)))
    total, _ = secondary_intensities(net, [0.1, 0.1], [0.2, 0.2])
    assert np.all(total == 0)


def test_symmetric_nodes_identical():
    rep = network_solve(symmetric(2))
    a, b = rep.nodes
    assert a == b
    assert rep.secondary_rates[0] == rep.secondary_rates[1]


def test_symmetric_sweep_values():
    expected = {2: (0.0473138277108, 0.0113250251033), 3: (0.00702493679729, 0.00151965685768),
                4: (0.00124618144345, 0.000243511556083)}
    prev = None
    for K, (pb, po) in expected.items():
        rep = network_solve(symmetric(K))
        assert rep.blocking == pytest.approx(pb, rel=1e-7)
        assert rep.ongoing_drop == pytest.approx(po, rel=1e-7)
        if prev is not None:
            assert rep.blocking <= prev.blocking and rep.ongoing_drop <= prev.ongoing_drop
        prev = rep


def test_non_convergence_reports_last_iterate():
    with pytest.raises(NonConvergenceError) as info:
        network_solve(symmetric(3, max_iterations=2, tol=1e-15))
    assert "phi" in info.value.last
