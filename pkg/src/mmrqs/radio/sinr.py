"""SINR distribution of a UE uniform in the cell and its mapping to resource demands."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from ..errors import DomainError
from .params import AntennaSpec, DeploymentSpec, PropagationParams
from .propagation import averaged_blockage_probability, budget_db, path_loss_db

GRID_LO, GRID_HI, GRID_STEP = -20.0, 60.0, 0.05
CONV_SPAN, CONV_POINTS = 9.0, 3601
TAIL_TOL = 1e-7

# NR CQI table (64QAM): SINR thresholds in dB and spectral efficiencies in bit/s/Hz
NR_CQI_THRESHOLDS_DB = (-9.478, -6.658, -4.098, -1.798, 0.399, 2.424, 4.489, 6.367,
                        8.456, 10.266, 12.218, 14.122, 15.849, 17.786, 19.809)
NR_CQI_EFFICIENCY = (0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141,
                     2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547)


@dataclass(frozen=True)
class McsTable:
    thresholds_db: tuple[float, ...]
    units: tuple[int, ...]
    target_rate_mbps: float | None = None

    def __post_init__(self):
        t = np.asarray(self.thresholds_db, dtype=float)
        u = np.asarray(self.units)
        if t.size == 0 or t.size != u.size:
            raise DomainError("MCS table needs matching nonempty thresholds and units")
        if np.any(np.diff(t) <= 0):
            raise DomainError("MCS thresholds must be strictly increasing")
        if np.any(u < 1) or np.any(np.diff(u) >= 0):
            raise DomainError("resource units must be positive and strictly decreasing")

    @classmethod
    def from_efficiencies(cls, thresholds_db, efficiencies, target_rate_mbps: float,
                          unit_bandwidth_mhz: float) -> "McsTable":
        """Units per MCS = ceil(rate / (efficiency * unit bandwidth)).

        Consecutive MCSs needing the same number of units are merged, keeping
        the lowest threshold.
        """
        if not target_rate_mbps > 0 or not unit_bandwidth_mhz > 0:
            raise DomainError("rate and unit bandwidth must be positive")
        th, un = [], []
        for s, e in zip(thresholds_db, efficiencies):
            r = int(math.ceil(target_rate_mbps / (e * unit_bandwidth_mhz) - 1e-12))
            if un and r >= un[-1]:
                continue
            th.append(float(s))
            un.append(r)
        return cls(tuple(th), tuple(un), target_rate_mbps)

    @classmethod
    def nr(cls, target_rate_mbps: float, unit_bandwidth_mhz: float = 1.44) -> "McsTable":
        return cls.from_efficiencies(NR_CQI_THRESHOLDS_DB, NR_CQI_EFFICIENCY, target_rate_mbps,
                                     unit_bandwidth_mhz)


@dataclass(frozen=True)
class SinrCdf:
    grid_db: np.ndarray
    values: np.ndarray
    nonblocked: np.ndarray
    blocked: np.ndarray
    blockage_weight: float

    def __call__(self, s_db):
        return np.interp(s_db, self.grid_db, self.values, left=0.0, right=1.0)

    def to_csv_rows(self):
        return [(float(g), float(v)) for g, v in zip(self.grid_db, self.values)]


@dataclass(frozen=True)
class ResourceDemandPmf:
    """p[j] = chance a new session asks for j units; ``outage`` is the rest."""

    probs: np.ndarray
    outage: float

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < -1e-15) or self.outage < -1e-15:
            raise DomainError("negative probability in demand pmf")
        if abs(p.sum() + self.outage - 1.0) > 1e-12:
            raise DomainError("demand pmf and outage mass must sum to 1")

    def normalized(self) -> np.ndarray:
        """Demand of sessions that are not in outage."""
        total = float(np.sum(self.probs))
        if total <= 0:
            raise DomainError("every session is in outage")
        return np.asarray(self.probs) / total


def _grid(lo=GRID_LO, hi=GRID_HI, step=GRID_STEP) -> np.ndarray:
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


def _branch_deterministic(grid, budget, gap, r_E, blocked, p):
    """CDF of the branch SINR without random shadowing (distance only)."""
    y_lo, y_hi = gap, math.sqrt(r_E * r_E + gap * gap)
    ys = np.geomspace(y_lo, y_hi, 4001)
    s = budget - path_loss_db(ys, blocked, p)  # decreasing in y
    # P(S <= g) = P(Y >= y*(g)) = 1 - F_Y(y*)
    ystar = np.interp(grid, s[::-1], ys[::-1], left=y_hi, right=y_lo)
    return 1.0 - (ystar * ystar - gap * gap) / (r_E * r_E)


def _branch_lognormal(grid, budget, gap, r_E, zeta, sigma):
    """Closed form with Normal dB shadowing when the path loss is a pure power law.

    With W = 10^((budget' - s + Z)/(5 zeta)), Z ~ N(0, sigma^2), the CDF is
    E[g(W)] with g(w) = 1 on w <= h^2, (h^2 + r^2 - w)/r^2 up to h^2 + r^2, else 0.
    """
    h2, t2 = gap * gap, gap * gap + r_E * r_E
    m = LN10_OVER_5 * (budget - grid) / zeta
    c = LN10_OVER_5 * sigma / zeta
    a, b = math.log(h2), math.log(t2)
    with np.errstate(over="ignore", invalid="ignore"):
        Pa = special.ndtr((a - m) / c)
        Pb = special.ndtr((b - m) / c)
        log_mean = m + 0.5 * c * c
        Ea = special.ndtr((a - m - c * c) / c)
        Eb = special.ndtr((b - m - c * c) / c)
        partial = np.exp(log_mean) * (Eb - Ea)
    partial = np.where(np.isfinite(partial), partial, 0.0)
    out = Pa + (t2 * (Pb - Pa) - partial) / (r_E * r_E)
    return np.clip(out, 0.0, 1.0)


LN10_OVER_5 = math.log(10.0) / 5.0


def _branch_convolved(grid, base_cdf, sigma):
    """Convolve a dB-domain CDF with N(0, sigma^2) by the trapezoid rule on a dense offset grid."""
    u = np.linspace(-CONV_SPAN * sigma, CONV_SPAN * sigma, CONV_POINTS)
    w = np.exp(-0.5 * (u / sigma) ** 2)
    w[0] *= 0.5
    w[-1] *= 0.5
    w /= w.sum()
    out = np.zeros_like(grid)
    for ui, wi in zip(u, w):
        out += wi * base_cdf(grid + ui)
    return out


def branch_cdf(grid, blocked: bool, d: DeploymentSpec, a: AntennaSpec, p: PropagationParams,
               r_E: float, margin_i_db: float, method: str | None = None) -> np.ndarray:
    gap = d.height_gap
    sigma = p.shadow_sigma_blocked if blocked else p.shadow_sigma_nonblocked
    zeta = p.exp_blocked if blocked else p.exp_nonblocked
    if p.shadow_mode == "margin" or sigma == 0:
        budget = budget_db(a, p, blocked, margin_i_db, include_shadow_margin=True)
        return _branch_deterministic(grid, budget, gap, r_E, blocked, p)
    budget = budget_db(a, p, blocked, margin_i_db, include_shadow_margin=False)
    if method is None:
        method = "closed" if p.absorption_coeff == 0 else "numeric"
    if method == "closed":
        if p.absorption_coeff != 0:
            raise DomainError("closed-form shadowing needs zero absorption")
        # budget' folds the intercept 10 log10(A) into the exponent
        return _branch_lognormal(grid, budget - 10 * math.log10(p.coeff), gap, r_E, zeta, sigma)
    if method != "numeric":
        raise DomainError(f"unknown shadowing method {method!r}")
    fine = _grid(grid[0] - CONV_SPAN * sigma - 1, grid[-1] + CONV_SPAN * sigma + 1, 0.005)
    base = _branch_deterministic(fine, budget, gap, r_E, blocked, p)
    return _branch_convolved(grid, lambda s: np.interp(s, fine, base, left=0.0, right=1.0), sigma)


def sinr_cdf(d: DeploymentSpec, a: AntennaSpec, p: PropagationParams, r_E: float,
             margin_i_db: float, grid=None, blockage_weight: float | None = None,
             bounds: tuple[float, float, float] = (GRID_LO, GRID_HI, GRID_STEP)) -> SinrCdf:
    """Blockage mixture of the non-blocked and blocked SINR CDFs on a dB grid.

    Without an explicit grid the ``bounds`` grid (lo, hi, step) is widened in
    10 dB steps until both tails settle.
    """
    if not r_E > 0:
        raise DomainError("coverage radius must be positive")
    piB = averaged_blockage_probability(d, r_E) if blockage_weight is None else blockage_weight

    def evaluate(g):
        nb = branch_cdf(g, False, d, a, p, r_E, margin_i_db)
        bl = branch_cdf(g, True, d, a, p, r_E, margin_i_db)
        mix = np.maximum.accumulate(np.clip((1.0 - piB) * nb + piB * bl, 0.0, 1.0))
        return nb, bl, mix

    if grid is None:
        lo, hi, step = bounds
        if not (hi > lo and step > 0):
            raise DomainError("SINR grid needs lo < hi and a positive step")
        for _ in range(30):
            grid = _grid(lo, hi, step)
            nb, bl, mix = evaluate(grid)
            low_ok, high_ok = mix[0] <= TAIL_TOL, mix[-1] >= 1.0 - TAIL_TOL
            if low_ok and high_ok:
                break
            lo -= 0.0 if low_ok else 10.0
            hi += 0.0 if high_ok else 10.0
    else:
        grid = np.asarray(grid, dtype=float)
        nb, bl, mix = evaluate(grid)
    if mix[0] > 1e-6 or mix[-1] < 1.0 - 1e-6:
        warnings.warn(f"SINR CDF not settled at the grid edges ({mix[0]:.2e}, {mix[-1]:.6f})",
                      RuntimeWarning, stacklevel=2)
    return SinrCdf(grid, mix, nb, bl, piB)


def resource_demand_pmf(cdf, mcs: McsTable) -> ResourceDemandPmf:
    """Probability of each MCS (by SINR interval) placed on its unit count.

    ``cdf`` is a SinrCdf or any callable returning F(s) in dB.
    """
    th = np.asarray(mcs.thresholds_db, dtype=float)
    if isinstance(cdf, SinrCdf) and (th[0] < cdf.grid_db[0] or th[-1] > cdf.grid_db[-1]):
        raise DomainError("MCS thresholds fall outside the SINR grid")
    F = np.asarray([float(cdf(s)) for s in th])
    F = np.maximum.accumulate(np.clip(F, 0.0, 1.0))
    eps = np.diff(np.append(F, 1.0))
    units = np.asarray(mcs.units)
    probs = np.zeros(int(units.max()) + 1)
    for r, e in zip(units, eps):
        probs[r] += e
    outage = float(F[0])
    probs *= (1.0 - outage) / probs.sum() if probs.sum() > 0 else 0.0
    return ResourceDemandPmf(probs, outage)
