"""Path loss, LoS blockage by human bodies, interference margin and coverage radius."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, optimize

from ..errors import DomainError, NoCoverageError, NumericError
from .antenna import antenna_gain, exposure_probability
from .params import AntennaSpec, DeploymentSpec, PropagationParams

LN10 = math.log(10.0)


def path_loss_db(y, blocked: bool, p: PropagationParams):
    """Power-law path loss at 3D distance ``y`` in meters, with optional absorption.

    With default parameters this is the UMi model: 32.4 + 20 log10(fc) plus
    21 log10(y) (non-blocked) or 31.9 log10(y) (blocked).
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise DomainError("distance must be positive")
    slope = 10.0 * (p.exp_blocked if blocked else p.exp_nonblocked)
    loss = 10.0 * math.log10(p.coeff) + slope * np.log10(y)
    if p.absorption_coeff > 0:
        loss = loss + 10.0 * p.absorption_coeff * y / LN10
    return loss if loss.ndim else float(loss)


def _horizontal(y, d: DeploymentSpec, strict: bool):
    y = np.asarray(y, dtype=float)
    gap2 = d.height_gap ** 2
    if strict and np.any(y < d.height_gap - 1e-12):
        raise DomainError("3D distance shorter than the BS-UE height difference")
    return np.sqrt(np.maximum(y * y - gap2, 0.0))


def blockage_probability_2d(x, d: DeploymentSpec):
    """Blockage chance at horizontal distance ``x``: the zone of length
    x (h_B - h_U)/(h_A - h_U) + r_B and width 2 r_B holds no blocker center."""
    x = np.asarray(x, dtype=float)
    length = x * (d.blocker_height - d.ue_height) / d.height_gap + d.blocker_radius
    out = -np.expm1(-2.0 * d.blocker_density * d.blocker_radius * length)
    return out if out.ndim else float(out)


def blockage_probability(y, d: DeploymentSpec):
    """Blockage chance at 3D distance ``y``."""
    return blockage_probability_2d(_horizontal(y, d, strict=True), d)


def averaged_blockage_probability(d: DeploymentSpec, r_E: float) -> float:
    """Blockage probability averaged over UEs uniform in a disk of radius ``r_E``."""
    if not r_E > 0:
        raise DomainError("coverage radius must be positive")
    if d.blocker_density == 0:
        return 0.0
    val, _ = integrate.quad(lambda x: blockage_probability_2d(x, d) * 2.0 * x / r_E ** 2, 0.0, r_E,
                            epsabs=0.0, epsrel=1e-10, limit=200)
    return float(val)


def _gains_db(a: AntennaSpec) -> tuple[float, float]:
    ga, _ = antenna_gain(a, "bs")
    gu, _ = antenna_gain(a, "ue")
    return 10 * math.log10(ga), 10 * math.log10(gu)


def link_constant(a: AntennaSpec, p: PropagationParams) -> float:
    """P_A G_A G_U / A in linear units (mW)."""
    ga, gu = _gains_db(a)
    return 10 ** ((a.tx_power_dbm + ga + gu) / 10.0) / p.coeff


def interference_moment(order: int, d: DeploymentSpec, a: AntennaSpec, p: PropagationParams,
                        exposure: float | None = None) -> float:
    """Moment of the aggregate interference (mW^order) from a Poisson BS field.

    The integral runs over the interferer distance from the exclusion radius
    to the interference horizon; blockage at distances shorter than the
    height gap is taken at zero horizontal offset.
    """
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    if not d.r_min > 0:
        raise DomainError("exclusion radius must be positive")
    if d.bs_density == 0:
        return 0.0
    C = link_constant(a, p)
    pc = exposure_probability(a) if exposure is None else exposure
    z1, z2 = p.exp_nonblocked, p.exp_blocked

    def f(x):
        pb = blockage_probability_2d(math.sqrt(max(x * x - d.height_gap ** 2, 0.0)), d)
        g = x ** -z1 * (1 - pb) + x ** -z2 * pb
        return (C * g) ** order * pc * 2.0 * d.bs_density * math.pi * x

    pts = [x for x in (d.height_gap,) if d.r_min < x < d.interference_horizon]
    val, _ = integrate.quad(f, d.r_min, d.interference_horizon, epsabs=0.0, epsrel=1e-10,
                            limit=400, points=pts or None)
    return float(val)


def interference_margin_db(d: DeploymentSpec, a: AntennaSpec, p: PropagationParams) -> float:
    if p.interference_margin_db is not None:
        return p.interference_margin_db
    noise_mw = 10 ** (p.noise_dbm / 10.0)
    return 10 * math.log10(1.0 + interference_moment(1, d, a, p) / noise_mw)


def budget_db(a: AntennaSpec, p: PropagationParams, blocked: bool, margin_i_db: float,
              include_shadow_margin: bool = True) -> float:
    """Everything in the SINR except the distance-dependent path loss."""
    ga, gu = _gains_db(a)
    out = a.tx_power_dbm + ga + gu - p.noise_dbm - margin_i_db
    if include_shadow_margin:
        out -= p.shadow_margin_db(blocked)
    if blocked:
        out -= p.blockage_extra_loss_db
    return out


def sinr_db(y, blocked: bool, a: AntennaSpec, p: PropagationParams, margin_i_db: float,
            include_shadow_margin: bool = True):
    return budget_db(a, p, blocked, margin_i_db, include_shadow_margin) - path_loss_db(y, blocked, p)


def coverage_radius(d: DeploymentSpec, a: AntennaSpec, p: PropagationParams, s_th_db: float,
                    margin_i_db: float | None = None) -> float:
    """Largest horizontal distance at which a blocked UE still reaches ``s_th_db``,
    capped by the inter-BS radius."""
    if margin_i_db is None:
        margin_i_db = interference_margin_db(d, a, p)
    gap = d.height_gap

    def excess(y):
        return float(sinr_db(y, True, a, p, margin_i_db)) - s_th_db

    if excess(gap) < 0:
        raise NoCoverageError("SINR threshold not reachable even directly below the BS")
    if p.absorption_coeff == 0:
        # closed form of the power law
        K = budget_db(a, p, True, margin_i_db) - 10 * math.log10(p.coeff)
        y_max = 10 ** ((K - s_th_db) / (10 * p.exp_blocked))
    else:
        hi = gap * 2.0
        while excess(hi) > 0:
            hi *= 2.0
            if hi > 1e9:
                raise NumericError("coverage radius search diverged")
        y_max = optimize.brentq(excess, gap, hi, xtol=1e-12, rtol=1e-14)
    r_s = math.sqrt(max(y_max * y_max - gap * gap, 0.0))
    return min(d.voronoi_radius, r_s)
