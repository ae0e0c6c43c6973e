"""Blocker crossing intensity, blocked/non-blocked durations, micromobility and the signal rate."""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate, special

from ..errors import DomainError
from .params import DeploymentSpec, LinkDynamics, MicromobilityParams

GL_NODES = 48


def zone_dimensions(d: DeploymentSpec, x: float) -> tuple[float, float]:
    """(length, width) of the LoS blockage rectangle for a UE at horizontal distance x."""
    length = x * (d.blocker_height - d.ue_height) / d.height_gap + d.blocker_radius
    return length, 2.0 * d.blocker_radius


def _span(px: float, py: float, L: float, W: float, s: float) -> float:
    """Angle of directions from (px, py) whose path of length s meets [0,L]x[0,W].

    The reachable part of the rectangle is its intersection with the disk of
    radius s; its angular extremes sit at rectangle corners inside the disk
    or where rectangle edges cross the circle.
    """
    pts = []
    for cx, cy in ((0.0, 0.0), (L, 0.0), (L, W), (0.0, W)):
        if (cx - px) ** 2 + (cy - py) ** 2 <= s * s:
            pts.append((cx, cy))
    s2 = s * s
    for fixed, lo, hi, vertical in ((0.0, 0.0, L, False), (W, 0.0, L, False),
                                    (0.0, 0.0, W, True), (L, 0.0, W, True)):
        off = (fixed - px) if vertical else (fixed - py)
        rem = s2 - off * off
        if rem < 0:
            continue
        root = math.sqrt(rem)
        centre = py if vertical else px
        for t in (centre - root, centre + root):
            if lo <= t <= hi:
                pts.append((fixed, t) if vertical else (t, fixed))
    if not pts:
        return 0.0
    ref = math.atan2(W / 2.0 - py, L / 2.0 - px)
    angles = []
    for qx, qy in pts:
        a = math.atan2(qy - py, qx - px) - ref
        a = (a + math.pi) % (2.0 * math.pi) - math.pi
        angles.append(a)
    return max(angles) - min(angles)


def _gauss(n: int, a: float, b: float):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def approach_integral(L: float, W: float, s: float, nodes: int = GL_NODES) -> float:
    """Integral of the hitting angle over the points within distance s of the rectangle.

    The region splits into eight zones: a band of depth s along each side and
    a quarter disk of radius s at each corner.
    """
    if s <= 0 or L <= 0 or W <= 0:
        return 0.0
    total = 0.0
    h, wh = _gauss(nodes, 0.0, s)
    # side bands: (along-side extent, mapping from (t, depth) to a point)
    sides = (
        (L, lambda t, e: (t, -e)),
        (L, lambda t, e: (t, W + e)),
        (W, lambda t, e: (-e, t)),
        (W, lambda t, e: (L + e, t)),
    )
    for extent, place in sides:
        t, wt = _gauss(nodes, 0.0, extent)
        for ti, wti in zip(t, wt):
            for ei, wei in zip(h, wh):
                px, py = place(ti, ei)
                total += wti * wei * _span(px, py, L, W, s)
    # corner quarter disks in polar coordinates
    corners = ((0.0, 0.0, math.pi), (L, 0.0, 1.5 * math.pi), (L, W, 0.0), (0.0, W, 0.5 * math.pi))
    rho, wr = _gauss(nodes, 0.0, s)
    for cx, cy, start in corners:
        psi, wp = _gauss(nodes, start, start + 0.5 * math.pi)
        for ri, wri in zip(rho, wr):
            for pi_, wpi in zip(psi, wp):
                px, py = cx + ri * math.cos(pi_), cy + ri * math.sin(pi_)
                total += wri * wpi * ri * _span(px, py, L, W, s)
    return total


def crossing_intensity_at(d: DeploymentSpec, x: float, nodes: int = GL_NODES) -> float:
    """Rate at which blockers enter the LoS zone of a UE at horizontal distance x (per second).

    Blockers within one second of travel are counted when their heading hits
    the zone and their current run outlasts the second.
    """
    if not d.rdm_mean_run > 0:
        raise DomainError("rdm_mean_run must be positive")
    if d.blocker_density == 0 or d.blocker_speed == 0:
        return 0.0
    L, W = zone_dimensions(d, x)
    s = d.blocker_speed * 1.0
    return d.blocker_density * math.exp(-1.0 / d.rdm_mean_run) / (2.0 * math.pi) * approach_integral(L, W, s, nodes)


def blocker_crossing_intensity(d: DeploymentSpec, r_E: float | None = None, x: float | None = None,
                               nodes: int = GL_NODES) -> float:
    """Crossing rate at distance ``x``, or averaged over a uniform UE in radius ``r_E``."""
    if x is not None:
        return crossing_intensity_at(d, x, nodes)
    if r_E is None or not r_E > 0:
        raise DomainError("give a distance x or a positive coverage radius r_E")
    if d.blocker_density == 0 or d.blocker_speed == 0:
        return 0.0
    xs, ws = _gauss(6, 0.0, r_E)
    # the rate is affine in the zone length, so a modest rule is exact up to quadrature error
    return float(sum(w * crossing_intensity_at(d, xi, nodes) * 2.0 * xi / r_E ** 2 for xi, w in zip(xs, ws)))


def crossing_time(d: DeploymentSpec) -> float:
    if not d.blocker_speed > 0:
        raise DomainError("blocker speed must be positive")
    return 2.0 * d.blocker_radius / d.blocker_speed


def blockage_state_durations(rate: float, crossing: float) -> tuple[float, float]:
    """(mean non-blocked, mean blocked) interval: exponential gaps and the M/G/inf busy period."""
    if not rate > 0 or not crossing > 0:
        raise DomainError("rate and crossing time must be positive")
    return 1.0 / rate, math.expm1(rate * crossing) / rate


# ---------------------------------------------------------------------------
# micromobility

def _lognormal_term(z, mu, sigma):
    return np.exp(-(z - mu) ** 2 / (2.0 * sigma ** 2)) / sigma


def _tail(mu, z, sigma):
    return special.erfc((mu - z) / (math.sqrt(2.0) * sigma))


def micromobility_pdf(t, m: MicromobilityParams):
    """Density of the time to beam misalignment, evaluated term by term."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("time must be positive")
    z = np.log(t)
    denom = 4.0 * math.sqrt(2.0 * math.pi) * t
    disp = (_lognormal_term(z, m.mu_x, m.sigma_x) * (2.0 - _tail(m.mu_y, z, m.sigma_y))
            + _lognormal_term(z, m.mu_y, m.sigma_y) * (2.0 - _tail(m.mu_x, z, m.sigma_x)))
    rot_weight = 1.0 - 0.5 * _tail(m.mu_phi, z, m.sigma_phi) + 0.5 * _tail(m.mu_theta, z, m.sigma_theta)
    rot = (_lognormal_term(z, m.mu_phi, m.sigma_phi) * (2.0 - _tail(m.mu_theta, z, m.sigma_theta))
           + _lognormal_term(z, m.mu_theta, m.sigma_theta) * (2.0 - _tail(m.mu_phi, z, m.sigma_phi)))
    disp_weight = 1.0 - 0.5 * _tail(m.mu_x, z, m.sigma_x) + 0.5 * _tail(m.mu_y, z, m.sigma_y)
    out = disp * rot_weight / denom + rot * disp_weight / denom
    return out if out.ndim else float(out)


def _z_range(m: MicromobilityParams) -> tuple[float, float]:
    mus = (m.mu_x, m.mu_y, m.mu_phi, m.mu_theta)
    sig = max(m.sigma_x, m.sigma_y, m.sigma_phi, m.sigma_theta)
    return min(mus) - 14.0 * sig, max(mus) + 14.0 * sig


def _log_quad(fn, lo: float, hi: float) -> float:
    """Integrate fn(t) dt over t = e^z for z in (lo, hi)."""
    if hi <= lo:
        return 0.0
    val, _ = integrate.quad(lambda z: fn(math.exp(z)) * math.exp(z), lo, hi, limit=400,
                            epsabs=1e-13, epsrel=1e-11)
    return val


def micromobility_mass(m: MicromobilityParams) -> float:
    return _log_quad(lambda t: micromobility_pdf(t, m), *_z_range(m))


def connectivity_time(m: MicromobilityParams, scheme: str = "on_demand", period: float | None = None):
    """(pdf, mean) of the time a link stays aligned.

    On demand, realignment happens only after misalignment, so the time is
    the misalignment time.  With periodic realignment every ``period``
    seconds the link lasts min(misalignment time, period).  The density is
    renormalised by its numerical mass before taking moments.
    """
    mass = micromobility_mass(m)
    lo, hi = _z_range(m)

    def pdf(t):
        return micromobility_pdf(t, m) / mass

    if scheme == "on_demand":
        mean = _log_quad(lambda t: t * pdf(t), lo, hi)
        return pdf, mean
    if scheme != "periodic":
        raise DomainError(f"unknown alignment scheme {scheme!r}")
    if period is None or not period > 0:
        raise DomainError("periodic alignment needs a positive period")
    cut = min(math.log(period), hi)
    head = _log_quad(lambda t: t * pdf(t), lo, cut)
    below = _log_quad(pdf, lo, cut)
    mean = head + period * max(0.0, 1.0 - below)

    def truncated(t):
        t = np.asarray(t, dtype=float)
        return np.where(t < period, pdf(t), 0.0)

    return truncated, mean


def signal_intensity(dyn: LinkDynamics) -> float:
    """Rate of per-session state changes: independent impairments add their rates."""
    rate = 0.0
    enabled = False
    if dyn.blockage_enabled and dyn.mean_nonblocked is not None:
        if not dyn.mean_nonblocked > 0:
            raise DomainError("mean non-blocked time must be positive")
        rate += 1.0 / dyn.mean_nonblocked
        enabled = True
    if dyn.micromobility_enabled and dyn.micromobility is not None:
        scheme = "on_demand" if dyn.realignment_period is None else "periodic"
        _, mean = connectivity_time(dyn.micromobility, scheme, dyn.realignment_period)
        rate += 1.0 / mean
        enabled = True
    if not enabled:
        warnings.warn("no impairment enabled; signal rate is zero", RuntimeWarning, stacklevel=2)
    return rate
