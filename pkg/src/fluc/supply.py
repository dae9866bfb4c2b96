"""Energy-aware hover placement serving ground users under QoS constraints.

Channel model: free-space path loss plus Shannon capacity. The placement
is a transparent 1 m grid search over the inflated bounding box of the
ground users, minimizing an energy proxy (altitude + half the horizontal
travel from the start point) subject to every user's demand being met.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geodesy import EnuPoint

MAX_GROUND_USERS = 32
MAX_ALTITUDE_M = 150.0
GRID_RESOLUTION_M = 1.0
TRAVEL_WEIGHT = 0.5

# Bisection bracket and tolerance for the demand -> distance inversion.
_BISECT_LO_M = 0.1
_BISECT_HI_M = 100_000.0
_BISECT_TOL_M = 1e-3


class NonPositiveDistance(ValueError):
    pass


class Infeasible(ValueError):
    """A single user's demand exceeds what the channel can ever deliver."""


class InfeasibleQoS(ValueError):
    """No grid point satisfies every user's demand simultaneously."""


@dataclass(frozen=True)
class GroundUser:
    x: float
    y: float
    z: float
    traffic: float  # Mbit/s demanded

    def __post_init__(self):
        if not (self.traffic > 0):
            raise ValueError(f"traffic must be positive, got {self.traffic}")
        if self.z < 0:
            raise ValueError(f"z must be >= 0, got {self.z}")
        for v in (self.x, self.y, self.z):
            if not math.isfinite(v):
                raise ValueError(f"coordinate {v} is not finite")


@dataclass(frozen=True)
class RadioModel:
    carrier_frequency_hz: float = 5_180e6
    bandwidth_hz: float = 40e6
    tx_power_dbm: float = 20.0
    antenna_gains_dbi: float = 5.0
    noise_power_dbm: float = -85.0
    min_altitude_m: float = 5.0

    def __post_init__(self):
        if not (self.bandwidth_hz > 0):
            raise ValueError("bandwidth must be positive")
        if not (self.min_altitude_m > 0):
            raise ValueError("min altitude must be positive")


@dataclass(frozen=True)
class QosEntry:
    user: GroundUser
    distance_m: float
    rate_mbps: float
    satisfied: bool


def fspl_db(d_m: float, f_hz: float) -> float:
    return 20.0 * math.log10(d_m) + 20.0 * math.log10(f_hz) - 147.55


def achievable_rate(d_m: float, radio: RadioModel = RadioModel()) -> float:
    """Shannon rate in Mbit/s at link distance d under free-space loss."""
    if not (d_m > 0):
        raise NonPositiveDistance(f"distance must be positive, got {d_m}")
    snr_db = (radio.tx_power_dbm + radio.antenna_gains_dbi
              - fspl_db(d_m, radio.carrier_frequency_hz) - radio.noise_power_dbm)
    return radio.bandwidth_hz * math.log2(1.0 + 10.0 ** (snr_db / 10.0)) / 1e6


def max_link_distance(traffic_mbps: float, radio: RadioModel = RadioModel()) -> float:
    """Largest distance at which the channel still delivers `traffic_mbps`.

    The rate is strictly decreasing in distance, so the root is unique;
    found by bisection to 1 mm.
    """
    if not (traffic_mbps > 0):
        raise ValueError(f"traffic must be positive, got {traffic_mbps}")
    lo, hi = _BISECT_LO_M, _BISECT_HI_M
    if achievable_rate(lo, radio) < traffic_mbps:
        raise Infeasible(
            f"demand {traffic_mbps} Mbit/s exceeds the rate at {lo} m "
            f"({achievable_rate(lo, radio):.1f} Mbit/s)")
    if achievable_rate(hi, radio) >= traffic_mbps:
        return hi
    while hi - lo > _BISECT_TOL_M:
        mid = 0.5 * (lo + hi)
        if achievable_rate(mid, radio) >= traffic_mbps:
            lo = mid
        else:
            hi = mid
    return lo


def qos_report(p: EnuPoint, gus, radio: RadioModel = RadioModel()):
    """Per-user distance, rate, and satisfaction at hover point p."""
    report = []
    for gu in gus:
        d = math.sqrt((p.east - gu.x) ** 2 + (p.north - gu.y) ** 2 + (p.up - gu.z) ** 2)
        rate = achievable_rate(max(d, 1e-6), radio)
        report.append(QosEntry(user=gu, distance_m=d, rate_mbps=rate,
                               satisfied=rate >= gu.traffic))
    return report


def supply_waypoints(gus, start: EnuPoint, radio: RadioModel = RadioModel()):
    """Climb + hover waypoints serving every ground user at minimum energy proxy.

    Grid search at 1 m over the users' bounding box inflated by the
    largest feasibility radius, altitudes from the radio floor to 150 m.
    Objective: altitude + 0.5 * horizontal distance from `start`; ties go
    to lower altitude, then lexicographic (east, north).
    """
    gus = list(gus)
    if not (1 <= len(gus) <= MAX_GROUND_USERS):
        raise ValueError(f"need 1..{MAX_GROUND_USERS} ground users, got {len(gus)}")

    radii = [max_link_distance(gu.traffic, radio) for gu in gus]
    r_max = max(radii)
    east_lo = math.floor(min(gu.x for gu in gus) - r_max)
    east_hi = math.ceil(max(gu.x for gu in gus) + r_max)
    north_lo = math.floor(min(gu.y for gu in gus) - r_max)
    north_hi = math.ceil(max(gu.y for gu in gus) + r_max)
    alt_lo = math.ceil(radio.min_altitude_m)
    alt_hi = math.floor(MAX_ALTITUDE_M)

    easts = np.arange(east_lo, east_hi + 1, GRID_RESOLUTION_M)
    norths = np.arange(north_lo, north_hi + 1, GRID_RESOLUTION_M)
    ee, nn = np.meshgrid(easts, norths, indexing="ij")
    horiz_from_start = np.hypot(ee - start.east, nn - start.north)

    best = None  # (objective, alt, east, north)
    for alt in np.arange(alt_lo, alt_hi + 1, GRID_RESOLUTION_M):
        if best is not None and alt >= best[0]:
            break  # objective >= altitude, so no higher slice can win
        feasible = np.ones(ee.shape, dtype=bool)
        for gu, r in zip(gus, radii):
            d2 = (ee - gu.x) ** 2 + (nn - gu.y) ** 2 + (alt - gu.z) ** 2
            feasible &= d2 <= r * r
            if not feasible.any():
                break
        if not feasible.any():
            continue
        obj = alt + TRAVEL_WEIGHT * horiz_from_start
        obj_masked = np.where(feasible, obj, np.inf)
        slice_min = obj_masked.min()
        if best is None or slice_min < best[0]:
            idx = np.argwhere(obj_masked == slice_min)
            # lexicographic (east, north) tie-break within the slice
            i, j = min(map(tuple, idx))
            best = (float(slice_min), float(alt), float(easts[i]), float(norths[j]))

    if best is None:
        raise InfeasibleQoS("no grid point satisfies every ground user's demand")

    _, alt, east, north = best
    climb = EnuPoint(east=start.east, north=start.north, up=alt)
    hover = EnuPoint(east=east, north=north, up=alt)
    return [climb, hover]


def placement_objective(p: EnuPoint, start: EnuPoint) -> float:
    return p.up + TRAVEL_WEIGHT * math.hypot(p.east - start.east, p.north - start.north)
