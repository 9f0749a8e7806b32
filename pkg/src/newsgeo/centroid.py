"""Weighted-centroid geocoding: mention-weighted mean of place positions in ECEF."""

from __future__ import annotations

import math
from typing import Sequence

from .errors import DegenerateCentroidError, NoCandidatesError
from .geo import WGS84_A, EcefPoint, GeoCoordinate, WeightedPlace, ecef_to_geodetic, geodetic_to_ecef

# mean points closer than this to the rotation axis have no meaningful longitude
_AXIS_TOL_M = 1e-6 * WGS84_A


def weighted_centroid(places: Sequence[WeightedPlace]) -> GeoCoordinate:
    if not places:
        raise NoCandidatesError("weighted centroid needs at least one place")
    total = math.fsum(p.weight for p in places)
    pts = [(p.weight, geodetic_to_ecef(p.coordinate)) for p in places]
    mean = EcefPoint(
        math.fsum(w * q.x for w, q in pts) / total,
        math.fsum(w * q.y for w, q in pts) / total,
        math.fsum(w * q.z for w, q in pts) / total,
    )
    rho = math.hypot(mean.x, mean.y)
    if rho < _AXIS_TOL_M:
        all_polar = all(math.hypot(q.x, q.y) < _AXIS_TOL_M for _, q in pts)
        if not all_polar or abs(mean.z) < _AXIS_TOL_M:
            raise DegenerateCentroidError(
                "weighted mean lies on the rotation axis; the places are (near-)antipodal"
            )
    return ecef_to_geodetic(mean)
