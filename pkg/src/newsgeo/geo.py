"""Geodetic primitives: coordinates, WGS84 ECEF conversion and bounding boxes."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

# WGS84
WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_B = WGS84_A * (1.0 - WGS84_F)
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)

_INVERSE_TOL_RAD = 1e-12
_INVERSE_MAX_ITER = 100


def normalize_longitude(lon: float) -> float:
    """Map ``lon`` into the half-open interval (-180, 180]."""
    if not math.isfinite(lon):
        raise ValidationError("lon_deg", f"not finite: {lon!r}")
    r = math.fmod(lon, 360.0)
    if r <= -180.0:
        r += 360.0
    elif r > 180.0:
        r -= 360.0
    return r


@dataclass(frozen=True)
class GeoCoordinate:
    lat_deg: float
    lon_deg: float

    def __post_init__(self):
        lat = float(self.lat_deg)
        if not (math.isfinite(lat) and -90.0 <= lat <= 90.0):
            raise ValidationError("lat_deg", f"must be in [-90, 90], got {self.lat_deg!r}")
        object.__setattr__(self, "lat_deg", lat)
        object.__setattr__(self, "lon_deg", normalize_longitude(float(self.lon_deg)))

    def to_dict(self) -> dict:
        return {"lat": self.lat_deg, "lon": self.lon_deg}

    @classmethod
    def from_dict(cls, d: dict) -> GeoCoordinate:
        return cls(d["lat"], d["lon"])


@dataclass(frozen=True)
class EcefPoint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(name, "ECEF component must be finite")


@dataclass(frozen=True)
class GeoBoundingBox:
    """Closed lat/lon box. ``west > east`` means the box crosses the antimeridian."""

    south: float
    north: float
    west: float
    east: float

    def __post_init__(self):
        for name in ("south", "north"):
            v = getattr(self, name)
            if not (math.isfinite(v) and -90.0 <= v <= 90.0):
                raise ValidationError(name, f"must be in [-90, 90], got {v!r}")
        if self.south > self.north:
            raise ValidationError("south", f"south {self.south} exceeds north {self.north}")
        for name in ("west", "east"):
            v = getattr(self, name)
            if not (math.isfinite(v) and -180.0 <= v <= 180.0):
                raise ValidationError(name, f"must be in [-180, 180], got {v!r}")

    @property
    def crosses_antimeridian(self) -> bool:
        return self.west > self.east

    @property
    def center(self) -> GeoCoordinate:
        east = self.east + 360.0 if self.crosses_antimeridian else self.east
        return GeoCoordinate((self.south + self.north) / 2.0, (self.west + east) / 2.0)

    def contains(self, lat: float, lon: float) -> bool:
        if not self.south <= lat <= self.north:
            return False
        if self.crosses_antimeridian:
            return lon >= self.west or lon <= self.east
        return self.west <= lon <= self.east

    def contains_coordinate(self, c: GeoCoordinate) -> bool:
        # -180 and 180 are the same meridian; GeoCoordinate only produces 180
        return self.contains(c.lat_deg, c.lon_deg) or (
            c.lon_deg == 180.0 and self.contains(c.lat_deg, -180.0)
        )

    def to_dict(self) -> dict:
        return {"south": self.south, "north": self.north, "west": self.west, "east": self.east}

    @classmethod
    def from_dict(cls, d: dict) -> GeoBoundingBox:
        return cls(d["south"], d["north"], d["west"], d["east"])


@dataclass(frozen=True)
class WeightedPlace:
    name: str
    coordinate: GeoCoordinate
    bbox: GeoBoundingBox
    weight: int = 1

    def __post_init__(self):
        if not self.name:
            raise ValidationError("name", "must be non-empty")
        if int(self.weight) != self.weight or self.weight < 1:
            raise ValidationError("weight", f"must be a positive integer, got {self.weight!r}")


def split_antimeridian(b: GeoBoundingBox) -> list[GeoBoundingBox]:
    if not b.crosses_antimeridian:
        return [b]
    return [
        GeoBoundingBox(b.south, b.north, b.west, 180.0),
        GeoBoundingBox(b.south, b.north, -180.0, b.east),
    ]


def geodetic_to_ecef(c: GeoCoordinate) -> EcefPoint:
    lat = math.radians(c.lat_deg)
    lon = math.radians(c.lon_deg)
    sin_lat = math.sin(lat)
    cos_lat = math.cos(lat)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    # exact anchors: sin/cos of pi/2 are not exactly 1/0 in floating point
    if c.lat_deg in (90.0, -90.0):
        return EcefPoint(0.0, 0.0, math.copysign(WGS84_B, c.lat_deg))
    return EcefPoint(
        n * cos_lat * math.cos(lon),
        n * cos_lat * math.sin(lon),
        n * (1.0 - WGS84_E2) * sin_lat,
    )


def ecef_to_geodetic(p: EcefPoint) -> GeoCoordinate:
    """Invert to latitude/longitude; altitude is discarded.

    Works for interior points too (the weighted mean of surface points),
    using the fixed-point form ``tan(lat) = (z + e2 N(lat) sin(lat)) / p``.
    """
    x, y, z = p.x, p.y, p.z
    if math.sqrt(x * x + y * y + z * z) < 1.0:
        raise ValidationError("ecef", "point within 1 m of the origin has no defined longitude")
    rho = math.hypot(x, y)
    if rho == 0.0:
        return GeoCoordinate(math.copysign(90.0, z), 0.0)
    lon = math.atan2(y, x)
    lat = math.atan2(z, rho * (1.0 - WGS84_E2))
    for _ in range(_INVERSE_MAX_ITER):
        s = math.sin(lat)
        n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * s * s)
        nxt = math.atan2(z + WGS84_E2 * n * s, rho)
        if abs(nxt - lat) <= _INVERSE_TOL_RAD:
            lat = nxt
            break
        lat = nxt
    else:
        raise ValidationError("ecef", "latitude iteration did not converge (point too close to the center)")
    return GeoCoordinate(math.degrees(lat), math.degrees(lon))
