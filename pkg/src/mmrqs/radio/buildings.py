"""LoS probability under building blockage on a regular city grid."""

from __future__ import annotations

import math

from ..errors import DomainError


def itu_los_probability(r_m: float, bs_height: float, ue_height: float,
                        alpha: float, beta: float, gamma: float) -> float:
    """ITU-R style product over the buildings expected between UE and BS.

    alpha: built-up land fraction, beta: buildings per km^2, gamma: building
    height scale (Rayleigh).  m = floor(r_km * sqrt(alpha beta)) - 1 buildings,
    each clearing the ray with probability 1 - exp(-h^2 / (2 gamma^2)).
    """
    if min(r_m, bs_height, ue_height, alpha, beta) < 0 or gamma < 0:
        raise DomainError("parameters must be nonnegative")
    m = math.floor(r_m / 1000.0 * math.sqrt(alpha * beta)) - 1
    prob = 1.0
    for n in range(m + 1):
        h = bs_height - (n + 0.5) * (bs_height - ue_height) / (m + 1)
        if gamma == 0:
            prob *= 1.0 if h > 0 else 0.0
            continue
        prob *= -math.expm1(-h * h / (2.0 * gamma * gamma))
    return prob


def gpp_umi_los_probability(l2d: float, ue_height: float) -> float:
    """Large-scale UMi LoS model with breakpoint d and decay p1 set by the UE height."""
    if l2d < 0 or not ue_height > 0:
        raise DomainError("distance must be nonnegative and height positive")
    p1 = 233.98 * math.log10(ue_height) - 0.95
    d = max(294.05 * math.log10(ue_height) - 432.94, 18.0)
    if l2d <= d:
        return 1.0
    if p1 <= 0:
        raise DomainError("UE height too low for this model")
    return d / l2d + (1.0 - d / l2d) * math.exp(-l2d / p1)


def building_los_probability(model: str, distance: float, **params) -> float:
    if model == "itu":
        return itu_los_probability(distance, **params)
    if model in ("3gpp", "3gpp_umi"):
        return gpp_umi_los_probability(distance, **params)
    raise DomainError(f"unknown building model {model!r}")
