"""Parameter records shared by the radio sub-models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import DomainError


def default_pathloss_coeff(fc_ghz: float) -> float:
    """Linear coefficient of the UMi power law at carrier ``fc_ghz``."""
    return 10.0 ** (2.0 * math.log10(fc_ghz) + 3.24)


@dataclass(frozen=True)
class PropagationParams:
    carrier_freq_ghz: float = 28.0
    pathloss_coeff: float | None = None  # linear; derived from fc when None
    exp_nonblocked: float = 2.1
    exp_blocked: float = 3.19
    blockage_extra_loss_db: float = 0.0
    absorption_coeff: float = 0.0  # per meter
    shadow_sigma_nonblocked: float = 4.0
    shadow_sigma_blocked: float = 8.2
    interference_margin_db: float | None = None  # computed from the BS field when None
    bandwidth_hz: float = 400e6
    noise_figure_db: float = 7.0
    shadow_mode: str = "margin"  # "margin" or "erf"

    def __post_init__(self):
        if not self.carrier_freq_ghz > 0:
            raise DomainError("carrier frequency must be positive")
        if not (self.exp_blocked >= self.exp_nonblocked > 0):
            raise DomainError("path loss exponents must satisfy blocked >= non-blocked > 0")
        if self.blockage_extra_loss_db < 0 or self.absorption_coeff < 0:
            raise DomainError("losses must be nonnegative")
        if self.shadow_sigma_nonblocked < 0 or self.shadow_sigma_blocked < 0:
            raise DomainError("shadow sigmas must be nonnegative")
        if self.interference_margin_db is not None and self.interference_margin_db < 0:
            raise DomainError("interference margin must be nonnegative")
        if self.shadow_mode not in ("margin", "erf"):
            raise DomainError("shadow_mode must be 'margin' or 'erf'")
        if not self.bandwidth_hz > 0:
            raise DomainError("bandwidth must be positive")

    @property
    def coeff(self) -> float:
        if self.pathloss_coeff is not None:
            return self.pathloss_coeff
        return default_pathloss_coeff(self.carrier_freq_ghz)

    @property
    def noise_dbm(self) -> float:
        return -174.0 + 10.0 * math.log10(self.bandwidth_hz) + self.noise_figure_db

    def shadow_margin_db(self, blocked: bool) -> float:
        sigma = self.shadow_sigma_blocked if blocked else self.shadow_sigma_nonblocked
        return math.sqrt(2.0) * sigma


@dataclass(frozen=True)
class DeploymentSpec:
    bs_height: float = 10.0
    ue_height: float = 1.5
    blocker_height: float = 1.7
    blocker_radius: float = 0.4
    blocker_density: float = 0.1
    blocker_speed: float = 1.0
    rdm_mean_run: float = 30.0
    bs_density: float = 1e-5
    inter_bs_radius: float | None = None
    interference_exclusion: float | None = None  # defaults to the blocker radius
    interference_horizon: float = 1000.0

    def __post_init__(self):
        if not (self.bs_height > self.blocker_height >= self.ue_height > 0):
            raise DomainError("heights must satisfy bs > blocker >= ue > 0")
        for name in ("blocker_radius", "blocker_density", "blocker_speed", "bs_density"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be nonnegative")
        if not self.rdm_mean_run > 0:
            raise DomainError("rdm_mean_run must be positive")
        if not 0 < self.r_min < self.interference_horizon:
            raise DomainError("need 0 < interference_exclusion < interference_horizon")
        if self.inter_bs_radius is not None and not self.inter_bs_radius > 0:
            raise DomainError("inter_bs_radius must be positive")

    @property
    def height_gap(self) -> float:
        return self.bs_height - self.ue_height

    @property
    def r_min(self) -> float:
        return self.blocker_radius if self.interference_exclusion is None else self.interference_exclusion

    @property
    def voronoi_radius(self) -> float:
        """Given inter-BS radius, else the circle of mean Voronoi cell area."""
        if self.inter_bs_radius is not None:
            return self.inter_bs_radius
        if self.bs_density <= 0:
            return math.inf
        return math.sqrt(1.0 / (math.pi * self.bs_density))


@dataclass(frozen=True)
class AntennaSpec:
    elements_bs: int = 16
    elements_ue: int = 4
    tx_power_dbm: float = 23.0
    model: str = "cone"  # cone | cone_plus_sphere | pyramidal
    side_ratio: float = 0.0
    switching_time: float = 1e-3
    beamsearch: str = "exhaustive"  # exhaustive | hierarchical

    def __post_init__(self):
        if self.elements_bs < 2 or self.elements_ue < 2:
            raise DomainError("arrays need at least 2 elements")
        if self.model not in ("cone", "cone_plus_sphere", "pyramidal"):
            raise DomainError(f"unknown antenna model {self.model!r}")
        if self.model == "cone_plus_sphere" and not 0 < self.side_ratio < 1:
            raise DomainError("cone_plus_sphere side_ratio must lie in (0,1)")
        if self.switching_time < 0:
            raise DomainError("switching time must be nonnegative")
        if self.beamsearch not in ("exhaustive", "hierarchical"):
            raise DomainError("beamsearch must be 'exhaustive' or 'hierarchical'")


@dataclass(frozen=True)
class MicromobilityParams:
    """Log-scale location/scale pairs of the four displacement and rotation components."""

    mu_x: float = 0.0
    sigma_x: float = 0.8
    mu_y: float = 0.0
    sigma_y: float = 0.8
    mu_phi: float = 0.4
    sigma_phi: float = 0.6
    mu_theta: float = 0.4
    sigma_theta: float = 0.6

    def __post_init__(self):
        if min(self.sigma_x, self.sigma_y, self.sigma_phi, self.sigma_theta) <= 0:
            raise DomainError("micromobility sigmas must be positive")


@dataclass(frozen=True)
class LinkDynamics:
    mean_nonblocked: float | None = None
    mean_blocked: float | None = None
    micromobility: MicromobilityParams | None = None
    beamsearch_time: float = 0.0
    realignment_period: float | None = None
    blockage_enabled: bool = True
    micromobility_enabled: bool = False
    extras: dict = field(default_factory=dict)
