"""Antenna radiation models, array beamwidth and array gain."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from ..errors import DomainError, NumericError
from .params import AntennaSpec

HPBW_CONSTANT = 2.782


def _check_angle(a: float, name: str) -> None:
    if not 0 < a < math.pi + 1e-15:
        raise DomainError(f"{name} must lie in (0, pi]")


def cone_gain(alpha: float) -> float:
    _check_angle(alpha, "beamwidth")
    return 2.0 / (1.0 - math.cos(alpha / 2.0))


def cone_plus_sphere_gains(alpha: float, side_ratio: float) -> tuple[float, float]:
    """Main and side gains with side = ratio * main and total radiated power conserved."""
    _check_angle(alpha, "beamwidth")
    if not 0 <= side_ratio < 1:
        raise DomainError("side_ratio must lie in [0,1)")
    c = math.cos(alpha / 2.0)
    main = 2.0 / ((1.0 - c) + side_ratio * (1.0 + c))
    return main, side_ratio * main


def pyramidal_gain(alpha_v: float, alpha_h: float) -> float:
    _check_angle(alpha_v, "vertical beamwidth")
    _check_angle(alpha_h, "horizontal beamwidth")
    x = math.tan(alpha_v / 2.0) * math.tan(alpha_h / 2.0)
    if not 0 < x <= 1:
        raise DomainError("beamwidths too wide for the pyramidal model")
    return math.pi / math.asin(x)


def hpbw_radians(n_elements: int, mode: str = "exact") -> float:
    if n_elements < 2:
        raise DomainError("HPBW needs at least 2 elements")
    if mode == "exact":
        return 2.0 * abs(math.pi / 2.0 - math.acos(-HPBW_CONSTANT / (n_elements * math.pi)))
    if mode == "approx":
        return math.radians(102.0 / n_elements)
    raise DomainError(f"unknown HPBW mode {mode!r}")


def hpbw_degrees(n_elements: int, mode: str = "exact") -> float:
    return math.degrees(hpbw_radians(n_elements, mode))


def array_factor(theta, n_elements: int):
    """|sin(N x)/sin(x)| with x = pi cos(theta) / 2, the broadside limit N at x = 0."""
    x = np.pi * np.cos(theta) / 2.0
    s = np.sin(x)
    small = np.abs(s) < 1e-12
    safe = np.where(small, 1.0, s)
    return np.where(small, float(n_elements), np.sin(n_elements * x) / safe)


def array_gain_linear(n_elements: int) -> float:
    """Array factor averaged over the 3-dB main lobe."""
    if n_elements < 2:
        raise DomainError("array gain needs at least 2 elements")
    lo = math.acos(HPBW_CONSTANT / (n_elements * math.pi))
    hi = math.acos(-HPBW_CONSTANT / (n_elements * math.pi))
    val, err, info = integrate.quad(lambda t: float(array_factor(t, n_elements)), lo, hi,
                                    epsabs=1e-12, epsrel=1e-10, full_output=True)[:3]
    if err > 1e-6 * max(1.0, abs(val)):
        raise NumericError(f"array gain integral inaccurate: value {val}, error {err}, evals {info['neval']}")
    return val / (hi - lo)


def array_gain_db(n_elements: int) -> float:
    return 10.0 * math.log10(array_gain_linear(n_elements))


def antenna_gain(spec: AntennaSpec, side: str = "bs") -> tuple[float, float | None]:
    """(main, side) linear gains of the BS or UE antenna of ``spec``."""
    n = spec.elements_bs if side == "bs" else spec.elements_ue
    alpha = hpbw_radians(n)
    if spec.model == "cone":
        return cone_gain(alpha), None
    if spec.model == "cone_plus_sphere":
        return cone_plus_sphere_gains(alpha, spec.side_ratio)
    return pyramidal_gain(alpha, alpha), None


def exposure_probability(spec: AntennaSpec) -> float:
    """Chance that a random interferer's and the UE's beams face each other."""
    return hpbw_radians(spec.elements_bs) * hpbw_radians(spec.elements_ue) / (4.0 * math.pi ** 2)


def beamsearch_time(spec: AntennaSpec) -> float:
    if spec.beamsearch == "exhaustive":
        return spec.elements_ue * spec.elements_bs * spec.switching_time
    return (spec.elements_ue + spec.elements_bs) * spec.switching_time
