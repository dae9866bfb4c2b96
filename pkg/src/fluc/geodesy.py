"""Coordinate frames and distances shared by every spatial computation.

Local-frame math uses a spherical Earth (R = 6 371 000 m) with an
equirectangular projection around the origin point. Missions span well
under 10 km, where the projection error is negligible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_000.0

# Small-area assumption for the local projection, degrees.
MAX_LOCAL_OFFSET_DEG = 1.0


class OutOfRange(ValueError):
    """A coordinate left its valid range or violated the small-area bound."""


@dataclass(frozen=True)
class GeoPoint:
    """WGS84 geodetic position; altitude is meters above home ground level."""

    lat: float
    lon: float
    alt: float = 0.0

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise OutOfRange(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0):
            raise OutOfRange(f"longitude {self.lon} outside [-180, 180]")
        if not math.isfinite(self.alt):
            raise OutOfRange(f"altitude {self.alt} is not finite")


@dataclass(frozen=True)
class EnuPoint:
    """East-north-up position in meters relative to a declared origin."""

    east: float
    north: float
    up: float = 0.0

    def __post_init__(self):
        for v in (self.east, self.north, self.up):
            if not math.isfinite(v):
                raise OutOfRange(f"ENU component {v} is not finite")


def enu_from_geo(origin: GeoPoint, p: GeoPoint) -> EnuPoint:
    """Project a geodetic point into the local ENU frame at `origin`."""
    dlat = p.lat - origin.lat
    dlon = p.lon - origin.lon
    if abs(dlat) >= MAX_LOCAL_OFFSET_DEG or abs(dlon) >= MAX_LOCAL_OFFSET_DEG:
        raise OutOfRange(
            f"point offset ({dlat:.4f}, {dlon:.4f}) deg exceeds the "
            f"{MAX_LOCAL_OFFSET_DEG} deg local-frame bound"
        )
    north = math.radians(dlat) * EARTH_RADIUS_M
    east = math.radians(dlon) * EARTH_RADIUS_M * math.cos(math.radians(origin.lat))
    return EnuPoint(east=east, north=north, up=p.alt - origin.alt)


def geo_from_enu(origin: GeoPoint, e: EnuPoint) -> GeoPoint:
    """Exact inverse of :func:`enu_from_geo` under the same projection."""
    lat = origin.lat + math.degrees(e.north / EARTH_RADIUS_M)
    cos_lat = math.cos(math.radians(origin.lat))
    lon = origin.lon + math.degrees(e.east / (EARTH_RADIUS_M * cos_lat))
    if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
        raise OutOfRange(f"inverse projection left valid ranges: ({lat}, {lon})")
    return GeoPoint(lat=lat, lon=lon, alt=origin.alt + e.up)


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters; ignores altitude."""
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def euclid3_m(a: EnuPoint, b: EnuPoint) -> float:
    """3D Euclidean distance between two local-frame points, meters."""
    return math.hypot(b.east - a.east, b.north - a.north, b.up - a.up)
