import math
import warnings

import numpy as np
import pytest

from mmrqs.errors import DomainError, NoCoverageError
from mmrqs.radio.antenna import (antenna_gain, array_gain_db, beamsearch_time, cone_gain,
                                 cone_plus_sphere_gains, hpbw_degrees, pyramidal_gain)
from mmrqs.radio.buildings import building_los_probability, gpp_umi_los_probability, itu_los_probability
from mmrqs.radio.dynamics import (blockage_state_durations, blocker_crossing_intensity,
                                  connectivity_time, crossing_intensity_at, micromobility_mass,
                                  micromobility_pdf, signal_intensity, zone_dimensions)
from mmrqs.radio.params import (AntennaSpec, DeploymentSpec, LinkDynamics, MicromobilityParams,
                                PropagationParams)
from mmrqs.radio.propagation import (averaged_blockage_probability, blockage_probability,
                                     blockage_probability_2d, coverage_radius, interference_margin_db,
                                     interference_moment, link_constant, path_loss_db, sinr_db)
from mmrqs.radio.scenario import ScenarioConfig, parameterize, reference_scenario
from mmrqs.radio.sinr import McsTable, SinrCdf, resource_demand_pmf, sinr_cdf
from mmrqs.sim_oracle.radio_mc import sample_sinr_db


# antennas

@pytest.mark.parametrize("n,exact,approx", [(64, 1.585, 1.594), (32, 3.171, 3.188),
                                            (16, 6.345, 6.375), (8, 12.71, 12.75)])
def test_hpbw_table(n, exact, approx):
    assert abs(hpbw_degrees(n) - exact) <= 0.01
    assert abs(hpbw_degrees(n, "approx") - approx) <= 0.01


@pytest.mark.parametrize("n,db", [(64, 17.59), (32, 14.58), (16, 11.57), (8, 8.57), (4, 5.57)])
def test_array_gain_table(n, db):
    assert abs(array_gain_db(n) - db) <= 0.05


def test_antenna_degenerate_cases():
    assert cone_gain(math.pi) == pytest.approx(2.0)
    assert pyramidal_gain(math.pi / 2, math.pi / 2) == pytest.approx(2.0)
    main, side = cone_plus_sphere_gains(0.3, 1e-12)
    assert main == pytest.approx(cone_gain(0.3), rel=1e-9)
    with pytest.raises(DomainError):
        cone_gain(0.0)
    with pytest.raises(DomainError):
        hpbw_degrees(1)


@pytest.mark.parametrize("alpha,k", [(0.2, 0.1), (1.0, 0.5), (2.5, 0.9)])
def test_cone_plus_sphere_power_balance(alpha, k):
    g1, g2 = cone_plus_sphere_gains(alpha, k)
    c = math.cos(alpha / 2)
    assert abs(g1 * (1 - c) + g2 * (1 + c) - 2.0) < 1e-12


def test_antenna_models_give_gains():
    for model, ratio in (("cone", 0.0), ("cone_plus_sphere", 0.2), ("pyramidal", 0.0)):
        main, side = antenna_gain(AntennaSpec(model=model, side_ratio=ratio))
        assert main > 1
        assert (side is None) == (model != "cone_plus_sphere")
    with pytest.raises(DomainError):
        AntennaSpec(model="cone_plus_sphere", side_ratio=1.5)


def test_beamsearch_times():
    a = AntennaSpec(elements_bs=64, elements_ue=4, switching_time=1e-3)
    assert beamsearch_time(a) == pytest.approx(0.256)
    h = AntennaSpec(elements_bs=64, elements_ue=4, switching_time=1e-3, beamsearch="hierarchical")
    assert beamsearch_time(h) == pytest.approx(0.068)


# propagation and blockage

def test_path_loss_at_one_meter():
    assert path_loss_db(1.0, False, PropagationParams()) == pytest.approx(32.4 + 20 * math.log10(28))
    assert path_loss_db(1.0, False, PropagationParams()) == pytest.approx(61.34, abs=0.01)
    with pytest.raises(DomainError):
        path_loss_db(0.0, False, PropagationParams())


def test_path_loss_slopes_and_absorption():
    p = PropagationParams()
    assert path_loss_db(10.0, True, p) - path_loss_db(1.0, True, p) == pytest.approx(31.9)
    q = PropagationParams(absorption_coeff=0.01)
    assert path_loss_db(100.0, False, q) - path_loss_db(100.0, False, p) == pytest.approx(
        10 * 0.01 * 100 / math.log(10))


def test_propagation_validation():
    with pytest.raises(DomainError):
        PropagationParams(exp_nonblocked=3.0, exp_blocked=2.0)
    with pytest.raises(DomainError):
        DeploymentSpec(bs_height=1.0)


def test_blockage_trivial_cases():
    d0 = DeploymentSpec(blocker_density=0.0)
    assert blockage_probability(50.0, d0) == 0.0
    d = DeploymentSpec(blocker_height=1.5, ue_height=1.5, blocker_density=0.3)
    assert blockage_probability(50.0, d) == pytest.approx(1 - math.exp(-2 * 0.3 * 0.4 ** 2))
    with pytest.raises(DomainError):
        blockage_probability(5.0, DeploymentSpec())


def test_blockage_against_cylinder_placement():
    d = DeploymentSpec(blocker_density=0.3, blocker_radius=0.4)
    y = 50.0
    x = math.sqrt(y * y - d.height_gap ** 2)
    L, W = zone_dimensions(d, x)
    rng = np.random.default_rng(5)
    # blocker centres in a box around the zone; blocked if any centre lands in the zone
    trials, box = 200_000, (L + 2.0) * (W + 2.0)
    counts = rng.poisson(d.blocker_density * box, trials)
    hits = np.zeros(trials, bool)
    total = counts.sum()
    px = rng.uniform(-1.0, L + 1.0, total)
    py = rng.uniform(-1.0, W + 1.0, total)
    inside = (px >= 0) & (px <= L) & (py >= 0) & (py <= W)
    owner = np.repeat(np.arange(trials), counts)
    hits[owner[inside]] = True
    est = hits.mean()
    se = math.sqrt(est * (1 - est) / trials)
    assert abs(blockage_probability(y, d) - est) <= 3 * se


def test_blockage_monotone():
    ys = np.linspace(8.6, 200, 40)
    base = DeploymentSpec()
    assert np.all(np.diff(blockage_probability(ys, base)) >= 0)
    for field, values in (("blocker_density", (0.05, 0.1, 0.5)), ("blocker_radius", (0.2, 0.4, 0.6)),
                          ("blocker_height", (1.6, 1.7, 1.9))):
        vals = [blockage_probability(60.0, DeploymentSpec(**{field: v})) for v in values]
        assert vals == sorted(vals)


def test_averaged_blockage():
    assert averaged_blockage_probability(DeploymentSpec(blocker_density=0.0), 80.0) == 0.0
    flat = DeploymentSpec(blocker_height=1.5, ue_height=1.5)
    assert averaged_blockage_probability(flat, 80.0) == pytest.approx(
        blockage_probability_2d(0.0, flat), abs=1e-12)
    d = DeploymentSpec()
    xs = np.linspace(0, 80.0, 100_001)
    ref = np.trapezoid(blockage_probability_2d(xs, d) * 2 * xs / 80.0 ** 2, xs)
    assert abs(averaged_blockage_probability(d, 80.0) - ref) < 1e-6


def test_interference_closed_form_without_blockers():
    d = DeploymentSpec(blocker_density=0.0)
    a, p = AntennaSpec(), PropagationParams()
    C, z = link_constant(a, p), p.exp_nonblocked
    want = C * 2 * d.bs_density * math.pi * (d.r_min ** (2 - z) - d.interference_horizon ** (2 - z)) / (z - 2)
    assert interference_moment(1, d, a, p, exposure=1.0) == pytest.approx(want, rel=1e-8)
    assert interference_moment(1, DeploymentSpec(bs_density=0.0), a, p) == 0.0


def test_interference_against_poisson_field():
    d = DeploymentSpec(bs_density=1e-4, interference_horizon=300.0)
    a, p = AntennaSpec(), PropagationParams()
    pc = 0.3
    C = link_constant(a, p)
    rng = np.random.default_rng(11)
    reps = 20_000
    lo, hi = d.r_min, d.interference_horizon
    counts = rng.poisson(d.bs_density * math.pi * (hi ** 2 - lo ** 2), reps)
    n = counts.sum()
    r = np.sqrt(rng.uniform(lo ** 2, hi ** 2, n))
    pb = blockage_probability_2d(np.sqrt(np.maximum(r * r - d.height_gap ** 2, 0)), d)
    blocked = rng.random(n) < pb
    exposed = rng.random(n) < pc
    power = C * np.where(blocked, r ** -p.exp_blocked, r ** -p.exp_nonblocked) * exposed
    sums = np.bincount(np.repeat(np.arange(reps), counts), weights=power, minlength=reps)
    est, se = sums.mean(), sums.std(ddof=1) / math.sqrt(reps)
    assert abs(interference_moment(1, d, a, p, exposure=pc) - est) <= 3 * se


def test_interference_monotone_in_density_and_exposure():
    a, p = AntennaSpec(), PropagationParams()
    dens = [interference_moment(1, DeploymentSpec(bs_density=x), a, p) for x in (1e-6, 1e-5, 1e-4)]
    assert dens == sorted(dens)
    exp = [interference_moment(1, DeploymentSpec(), a, p, exposure=e) for e in (0.01, 0.1, 1.0)]
    assert exp == sorted(exp)
    with pytest.raises(DomainError):
        interference_moment(3, DeploymentSpec(), a, p)


def test_coverage_radius_inversion():
    d = DeploymentSpec(inter_bs_radius=1e4)
    a, p = AntennaSpec(), PropagationParams()
    margin = interference_margin_db(d, a, p)
    s_th = -9.478
    r = coverage_radius(d, a, p, s_th, margin)
    y = math.hypot(r, d.height_gap)
    assert abs(sinr_db(y, True, a, p, margin) - s_th) < 0.01
    absorbing = PropagationParams(absorption_coeff=0.005)
    r2 = coverage_radius(d, a, absorbing, s_th, margin)
    assert abs(sinr_db(math.hypot(r2, d.height_gap), True, a, absorbing, margin) - s_th) < 0.01


def test_coverage_radius_capped_and_degenerate():
    a, p = AntennaSpec(), PropagationParams()
    small = DeploymentSpec(inter_bs_radius=20.0)
    assert coverage_radius(small, a, p, -9.478, 0.0) == 20.0
    d = DeploymentSpec(inter_bs_radius=1e4)
    y = d.height_gap
    s_at_gap = sinr_db(y, True, a, p, 0.0)
    assert coverage_radius(d, a, p, s_at_gap, 0.0) == pytest.approx(0.0, abs=1e-5)
    with pytest.raises(NoCoverageError):
        coverage_radius(d, a, p, s_at_gap + 1.0, 0.0)


# SINR distribution and demand pmf

def test_sinr_cdf_is_valid():
    d, a, p = DeploymentSpec(), AntennaSpec(), PropagationParams()
    for mode in ("margin", "erf"):
        pp = PropagationParams(shadow_mode=mode)
        cdf = sinr_cdf(d, a, pp, 80.0, 3.0)
        v = cdf.values
        assert np.all(np.diff(v) >= 0) and v.min() >= 0 and v.max() <= 1
        assert v[0] <= 1e-6 and v[-1] >= 1 - 1e-6


def test_sinr_cdf_step_without_spread():
    d = DeploymentSpec(blocker_density=0.0)
    a, p = AntennaSpec(), PropagationParams(shadow_sigma_nonblocked=0.0, shadow_sigma_blocked=0.0)
    r = 1e-4
    cdf = sinr_cdf(d, a, p, r, 0.0)
    s0 = sinr_db(d.height_gap, False, a, p, 0.0)
    assert cdf(s0 - 0.1) == pytest.approx(0.0, abs=1e-6)
    assert cdf(s0 + 0.1) == pytest.approx(1.0, abs=1e-6)


def test_sinr_cdf_against_monte_carlo():
    sc = reference_scenario()
    par = parameterize(sc)
    d, a, p = sc.deployment, sc.antenna, sc.propagation
    r_E = par.diagnostics["coverage_radius_m"]
    margin = par.diagnostics["interference_margin_db"]
    rng = np.random.Generator(np.random.Philox(3))
    s, _ = sample_sinr_db(rng, 1_000_000, d, a, p, r_E, margin)
    s.sort()
    grid = par.cdf.grid_db
    emp = np.searchsorted(s, grid, side="right") / s.size
    # position-dependent blockage in the sampler against the averaged weight here
    assert np.abs(emp - par.cdf.values).max() <= 0.02


def test_sinr_grid_widens_when_needed():
    d, a, p = DeploymentSpec(), AntennaSpec(), PropagationParams()
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cdf = sinr_cdf(d, a, p, 80.0, 3.0, bounds=(10.0, 20.0, 0.1))
    assert cdf.grid_db[0] < 10.0 or cdf.grid_db[-1] > 20.0
    with pytest.raises(DomainError):
        sinr_cdf(d, a, p, 80.0, 3.0, bounds=(5.0, 1.0, 0.1))


def test_nr_mcs_units():
    assert McsTable.nr(10.0).units == (46, 30, 19, 12, 8, 6, 5, 4, 3, 2)
    with pytest.raises(DomainError):
        McsTable((1.0, 0.0), (3, 2))
    with pytest.raises(DomainError):
        McsTable((0.0, 1.0), (2, 3))


def test_demand_pmf_extremes_and_staircase():
    mcs = McsTable((0.0, 5.0, 10.0), (6, 3, 1))
    above = resource_demand_pmf(lambda s: 0.0, mcs)
    assert above.outage == 0 and above.probs[1] == pytest.approx(1.0)
    below = resource_demand_pmf(lambda s: 1.0, mcs)
    assert below.outage == 1.0 and below.probs.sum() == 0.0
    stairs = resource_demand_pmf(lambda s: 0.1 if s < 5 else (0.35 if s < 10 else 0.9), mcs)
    assert stairs.outage == pytest.approx(0.1)
    np.testing.assert_allclose(stairs.probs[[6, 3, 1]], [0.25, 0.55, 0.1], atol=1e-15)
    assert stairs.probs.sum() + stairs.outage == pytest.approx(1.0, abs=1e-12)


# dynamics

def test_crossing_intensity_zero_cases():
    assert blocker_crossing_intensity(DeploymentSpec(blocker_density=0.0), x=30.0) == 0.0
    assert blocker_crossing_intensity(DeploymentSpec(blocker_speed=0.0), x=30.0) == 0.0


def test_crossing_intensity_against_mobility_simulation():
    # random-direction walkers on a torus; count entries of centres into the LoS zone
    d = DeploymentSpec(blocker_density=1.0)
    x = 50.0
    L, W = zone_dimensions(d, x)
    rng = np.random.default_rng(8)
    side, dt, steps = 24.0, 0.01, 50_000
    n = rng.poisson(d.blocker_density * side * side)
    pos = rng.uniform(0, side, (n, 2))
    ang = rng.uniform(0, 2 * math.pi, n)
    x0, y0 = (side - L) / 2, (side - W) / 2

    def inside(q):
        return (q[:, 0] >= x0) & (q[:, 0] <= x0 + L) & (q[:, 1] >= y0) & (q[:, 1] <= y0 + W)

    was = inside(pos)
    entries = 0
    turn = 1 - math.exp(-dt / d.rdm_mean_run)
    for _ in range(steps):
        pos += d.blocker_speed * dt * np.column_stack((np.cos(ang), np.sin(ang)))
        pos %= side
        now = inside(pos)
        entries += int(np.count_nonzero(now & ~was))
        was = now
        flip = rng.random(n) < turn
        ang[flip] = rng.uniform(0, 2 * math.pi, int(flip.sum()))
    rate = entries / (steps * dt)
    assert abs(crossing_intensity_at(d, x) - rate) / rate < 0.05


def test_crossing_intensity_cell_average_is_mean_over_positions():
    d = DeploymentSpec()
    r_E = 60.0
    xs = np.linspace(0, r_E, 61)
    vals = np.array([crossing_intensity_at(d, v, nodes=12) for v in xs])
    ref = np.trapezoid(vals * 2 * xs / r_E ** 2, xs)
    assert blocker_crossing_intensity(d, r_E=r_E, nodes=12) == pytest.approx(ref, rel=1e-4)
    with pytest.raises(DomainError):
        blocker_crossing_intensity(d)


def test_blocked_duration_limits():
    _, b = blockage_state_durations(1e-6, 0.8)
    assert abs(b - 0.8) / 0.8 < 1e-4
    eps = 0.7
    nb, b = blockage_state_durations(eps, math.log(2) / eps)
    assert b == pytest.approx(1 / eps) and nb == pytest.approx(1 / eps)
    with pytest.raises(DomainError):
        blockage_state_durations(0.0, 1.0)


def test_blocked_duration_against_busy_period_simulation():
    eps, T = 0.5, 0.8
    rng = np.random.default_rng(21)
    arrivals = np.cumsum(rng.exponential(1 / eps, 400_000))
    ends = arrivals + T
    # a busy period starts whenever an arrival finds everyone gone
    reach = np.maximum.accumulate(ends)
    starts = np.r_[True, arrivals[1:] > reach[:-1]]
    first = np.flatnonzero(starts)
    last_end = np.r_[reach[first[1:] - 1], reach[-1]]
    periods = last_end - arrivals[first]
    _, mean_b = blockage_state_durations(eps, T)
    se = periods.std(ddof=1) / math.sqrt(periods.size)
    assert abs(periods.mean() - mean_b) <= 3 * se


def test_signal_intensity_composition():
    assert signal_intensity(LinkDynamics(mean_nonblocked=4.0)) == pytest.approx(0.25)
    with pytest.warns(RuntimeWarning):
        assert signal_intensity(LinkDynamics(blockage_enabled=False)) == 0.0
    mm = MicromobilityParams()
    _, mean = connectivity_time(mm)
    both = LinkDynamics(mean_nonblocked=4.0, micromobility=mm, micromobility_enabled=True)
    assert signal_intensity(both) == pytest.approx(0.25 + 1 / mean)


def test_signal_rates_add_like_racing_clocks():
    rng = np.random.default_rng(4)
    a, b = rng.exponential(4.0, 200_000), rng.exponential(2.5, 200_000)
    first = np.minimum(a, b)
    alpha = signal_intensity(LinkDynamics(mean_nonblocked=4.0)) + 1 / 2.5
    se = first.std(ddof=1) / math.sqrt(first.size)
    assert abs(first.mean() - 1 / alpha) <= 3 * se


def test_micromobility_density():
    m = MicromobilityParams()
    assert abs(micromobility_mass(m) - 1.0) <= 0.01
    with pytest.raises(DomainError):
        micromobility_pdf(0.0, m)


def test_micromobility_symmetric_parameters():
    # equal displacement and equal rotation parameters: paired terms coincide and the weights are 1
    from scipy.special import erfc
    m = MicromobilityParams(mu_x=0.1, sigma_x=0.5, mu_y=0.1, sigma_y=0.5,
                            mu_phi=0.3, sigma_phi=0.7, mu_theta=0.3, sigma_theta=0.7)
    t = np.geomspace(0.05, 50, 30)
    z = np.log(t)

    def term(mu, sigma):
        return 2 * np.exp(-(z - mu) ** 2 / (2 * sigma ** 2)) / sigma * (2 - erfc((mu - z) / (math.sqrt(2) * sigma)))

    want = (term(0.1, 0.5) + term(0.3, 0.7)) / (4 * math.sqrt(2 * math.pi) * t)
    np.testing.assert_allclose(micromobility_pdf(t, m), want, rtol=1e-12)


def test_periodic_realignment_limits():
    m = MicromobilityParams()
    _, on_demand = connectivity_time(m)
    _, long_period = connectivity_time(m, "periodic", 1e9)
    assert abs(long_period - on_demand) < 1e-6
    _, short = connectivity_time(m, "periodic", 0.5)
    assert short < 0.5 + 1e-12
    with pytest.raises(DomainError):
        connectivity_time(m, "periodic")


# buildings

def test_building_models():
    assert itu_los_probability(0.0, 20.0, 1.5, 0.3, 500.0, 15.0) == 1.0
    assert gpp_umi_los_probability(10.0, 1.5) == 1.0
    assert 0 < gpp_umi_los_probability(200.0, 1.5) < 1
    with pytest.raises(DomainError):
        building_los_probability("other", 10.0)
    with pytest.raises(DomainError):
        itu_los_probability(-1.0, 20.0, 1.5, 0.3, 500.0, 15.0)


def test_itu_product_direct():
    alpha, beta, gamma, hb, hu = 0.5, 300.0, 0.01, 30.0, 1.5
    r = 11.0 * 1000 / math.sqrt(alpha * beta)  # gives m = 10
    m = 10
    direct = 1.0
    for n in range(m + 1):
        h = hb - (n + 0.5) * (hb - hu) / (m + 1)
        direct *= 1 - math.exp(-h * h / (2 * gamma * gamma))
    got = building_los_probability("itu", r + 1e-6, bs_height=hb, ue_height=hu, alpha=alpha,
                                   beta=beta, gamma=gamma)
    assert abs(got - direct) < 1e-12


# end to end

def test_parameterize_reference():
    par = parameterize(reference_scenario())
    assert par.demand.probs.sum() + par.demand.outage == pytest.approx(1.0, abs=1e-12)
    assert par.signal_rate > 0
    assert par.diagnostics["mean_nonblocked_s"] == pytest.approx(1 / par.signal_rate)
    assert set(np.flatnonzero(par.demand.probs)) <= set(McsTable.nr(10.0).units)


def test_parameterize_without_dynamics():
    par = parameterize(ScenarioConfig(blockage_dynamics=False))
    assert par.signal_rate == 0.0
    assert not par.dynamics.blockage_enabled
