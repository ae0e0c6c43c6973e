"""Monte-Carlo oracle for the demand pmf: sample users, blockage and shadowing, then map to an MCS.

The link budget is written out again here from the UMi formula so that the
analytic SINR distribution is checked against an independent code path.
Only the antenna gains, interference margin and cell radius are shared
inputs; they describe the scenario rather than the computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..radio.antenna import antenna_gain
from ..radio.params import AntennaSpec, DeploymentSpec, PropagationParams
from ..radio.sinr import McsTable


@dataclass(frozen=True)
class MonteCarloPmf:
    probs: np.ndarray
    outage: float
    samples: int
    blocked_fraction: float


def sample_sinr_db(rng: np.random.Generator, n: int, d: DeploymentSpec, a: AntennaSpec,
                   p: PropagationParams, r_E: float, margin_i_db: float) -> tuple[np.ndarray, np.ndarray]:
    """SINR samples (dB) for users uniform in the disk of radius r_E, plus the blockage flags."""
    x = r_E * np.sqrt(rng.random(n))
    gap = d.bs_height - d.ue_height
    y = np.hypot(x, gap)
    zone = x * (d.blocker_height - d.ue_height) / gap + d.blocker_radius
    p_block = 1.0 - np.exp(-2.0 * d.blocker_radius * d.blocker_density * zone)
    blocked = rng.random(n) < p_block

    intercept = 10.0 * math.log10(p.pathloss_coeff) if p.pathloss_coeff else 32.4 + 20.0 * math.log10(p.carrier_freq_ghz)
    slope = np.where(blocked, p.exp_blocked, p.exp_nonblocked) * 10.0
    loss = intercept + slope * np.log10(y) + 10.0 * p.absorption_coeff * y * math.log10(math.e)
    loss = loss + np.where(blocked, p.blockage_extra_loss_db, 0.0)

    gains = sum(10.0 * math.log10(antenna_gain(a, side)[0]) for side in ("bs", "ue"))
    noise = -174.0 + 10.0 * math.log10(p.bandwidth_hz) + p.noise_figure_db
    sigma = np.where(blocked, p.shadow_sigma_blocked, p.shadow_sigma_nonblocked)
    if p.shadow_mode == "erf":
        shadow = sigma * rng.standard_normal(n)
    else:
        shadow = -math.sqrt(2.0) * sigma
    s = a.tx_power_dbm + gains - loss - noise - margin_i_db + shadow
    return s, blocked


def monte_carlo_pmf(d: DeploymentSpec, a: AntennaSpec, p: PropagationParams, r_E: float,
                    margin_i_db: float, mcs: McsTable, samples: int = 1_000_000,
                    seed: int = 0) -> MonteCarloPmf:
    rng = np.random.Generator(np.random.Philox(seed))
    s, blocked = sample_sinr_db(rng, samples, d, a, p, r_E, margin_i_db)
    th = np.asarray(mcs.thresholds_db)
    level = np.searchsorted(th, s, side="right") - 1
    probs = np.zeros(max(mcs.units) + 1)
    for i, u in enumerate(mcs.units):
        probs[u] += np.count_nonzero(level == i) / samples
    return MonteCarloPmf(probs, float(np.count_nonzero(level < 0) / samples), samples,
                         float(blocked.mean()))


def total_variation(p, q, outage_p: float = 0.0, outage_q: float = 0.0) -> float:
    p, q = np.asarray(p, float), np.asarray(q, float)
    w = max(p.size, q.size)
    p = np.pad(p, (0, w - p.size))
    q = np.pad(q, (0, w - q.size))
    return 0.5 * (float(np.abs(p - q).sum()) + abs(outage_p - outage_q))
