"""From a radio scenario to the two inputs of the queuing models: a demand pmf and a signal rate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .antenna import beamsearch_time
from .dynamics import (blockage_state_durations, blocker_crossing_intensity, crossing_time,
                       signal_intensity)
from .params import AntennaSpec, DeploymentSpec, LinkDynamics, MicromobilityParams, PropagationParams
from .propagation import interference_margin_db, coverage_radius
from .sinr import McsTable, ResourceDemandPmf, SinrCdf, resource_demand_pmf, sinr_cdf


@dataclass(frozen=True)
class ScenarioConfig:
    propagation: PropagationParams = field(default_factory=PropagationParams)
    deployment: DeploymentSpec = field(default_factory=DeploymentSpec)
    antenna: AntennaSpec = field(default_factory=AntennaSpec)
    target_rate_mbps: float = 10.0
    unit_bandwidth_mhz: float = 1.44
    mcs: McsTable | None = None
    blockage_dynamics: bool = True
    micromobility: MicromobilityParams | None = None
    realignment_period: float | None = None
    sinr_grid_db: tuple[float, float, float] = (-20.0, 60.0, 0.05)

    @property
    def mcs_table(self) -> McsTable:
        return self.mcs or McsTable.nr(self.target_rate_mbps, self.unit_bandwidth_mhz)


@dataclass(frozen=True)
class Parameterization:
    demand: ResourceDemandPmf
    signal_rate: float
    cdf: SinrCdf
    dynamics: LinkDynamics
    diagnostics: dict


def parameterize(sc: ScenarioConfig) -> Parameterization:
    d, a, p = sc.deployment, sc.antenna, sc.propagation
    mcs = sc.mcs_table
    margin = interference_margin_db(d, a, p)
    r_E = coverage_radius(d, a, p, mcs.thresholds_db[0], margin)
    cdf = sinr_cdf(d, a, p, r_E, margin, bounds=tuple(sc.sinr_grid_db))
    demand = resource_demand_pmf(cdf, mcs)

    mean_nb = mean_b = None
    crossing_rate = 0.0
    if sc.blockage_dynamics and d.blocker_density > 0 and d.blocker_speed > 0:
        crossing_rate = blocker_crossing_intensity(d, r_E=r_E)
        mean_nb, mean_b = blockage_state_durations(crossing_rate, crossing_time(d))
    dyn = LinkDynamics(
        mean_nonblocked=mean_nb,
        mean_blocked=mean_b,
        micromobility=sc.micromobility,
        beamsearch_time=beamsearch_time(a),
        realignment_period=sc.realignment_period,
        blockage_enabled=mean_nb is not None,
        micromobility_enabled=sc.micromobility is not None,
    )
    if dyn.blockage_enabled or dyn.micromobility_enabled:
        alpha = signal_intensity(dyn)
    else:
        alpha = 0.0
    diagnostics = {
        "coverage_radius_m": r_E,
        "interference_margin_db": margin,
        "averaged_blockage_probability": cdf.blockage_weight,
        "blocker_crossing_rate_per_s": crossing_rate,
        "mean_nonblocked_s": mean_nb if mean_nb is not None else math.nan,
        "mean_blocked_s": mean_b if mean_b is not None else math.nan,
        "outage_probability": demand.outage,
        "beamsearch_time_s": dyn.beamsearch_time,
    }
    return Parameterization(demand, alpha, cdf, dyn, diagnostics)


def reference_scenario() -> ScenarioConfig:
    """Default deployment with lognormal shadowing integrated exactly rather than as a margin."""
    return ScenarioConfig(propagation=PropagationParams(shadow_mode="erf"))
