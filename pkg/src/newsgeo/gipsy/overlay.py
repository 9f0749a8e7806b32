"""GIPSY-style weighted prism stacking over bounding-box footprints.

Each place becomes a prism whose base is its bounding box and whose height
is its mention weight. Stacking prisms (side by side when disjoint, on top
of each other where they overlap) yields a piecewise-constant elevation
surface whose value in any cell is the sum of the heights of the prisms
covering it. The location estimate is the centroid of the highest region.

The surface is represented exactly by coordinate compression: the sorted
unique footprint edges cut the plane into a grid of cells, and cells are
closed on their south/west edges and open on north/east.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import NoCandidatesError, ValidationError
from ..geo import GeoBoundingBox, GeoCoordinate, WeightedPlace, normalize_longitude, split_antimeridian
from . import kernels

POINT_EXPANSION_DEG = 0.02
LAT_BAND_DEG = 10.0
# areas equal to this relative precision count as tied
_AREA_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class Prism:
    footprint: GeoBoundingBox
    height: int

    def __post_init__(self):
        fp = self.footprint
        if fp.crosses_antimeridian:
            raise ValidationError("footprint", "must be split at the antimeridian first")
        if not (fp.north > fp.south and fp.east > fp.west):
            raise ValidationError("footprint", "must have positive area")
        if int(self.height) != self.height or self.height < 1:
            raise ValidationError("height", f"must be a positive integer, got {self.height!r}")


@dataclass(frozen=True)
class Cell:
    south: float
    north: float
    west: float
    east: float
    elevation: int


@dataclass(frozen=True)
class MaxRegion:
    cells: tuple[int, ...]
    elevation: int
    area: float
    centroid: GeoCoordinate
    south: float
    west: float


class ElevationMap:
    """Read-only stacked surface. ``elevation[j, i]`` covers lat row j, lon column i."""

    def __init__(self, x_cuts, y_cuts, elevation, wrap_x=False):
        self.x_cuts = np.asarray(x_cuts, dtype=np.float64)
        self.y_cuts = np.asarray(y_cuts, dtype=np.float64)
        self.elevation = np.asarray(elevation, dtype=np.int64)
        self.wrap_x = bool(wrap_x)
        for a in (self.x_cuts, self.y_cuts, self.elevation):
            a.flags.writeable = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.elevation.shape

    @property
    def max_elevation(self) -> int:
        return int(self.elevation.max()) if self.elevation.size else 0

    def cell(self, index: int) -> Cell:
        ncols = self.elevation.shape[1]
        j, i = divmod(index, ncols)
        return Cell(
            float(self.y_cuts[j]), float(self.y_cuts[j + 1]),
            float(self.x_cuts[i]), float(self.x_cuts[i + 1]),
            int(self.elevation[j, i]),
        )

    @property
    def cells(self) -> list[Cell]:
        return [self.cell(k) for k in range(self.elevation.size)]

    def sample(self, lats, lons) -> np.ndarray:
        """Elevation on the grid ``lats x lons`` (result shape ``(len(lats), len(lons))``)."""
        lats = np.asarray(lats, dtype=np.float64)
        lons = np.asarray(lons, dtype=np.float64)
        nrows, ncols = self.elevation.shape
        j = np.searchsorted(self.y_cuts, lats, side="right") - 1
        i = np.searchsorted(self.x_cuts, lons, side="right") - 1
        jok = (j >= 0) & (j < nrows)
        iok = (i >= 0) & (i < ncols)
        out = np.zeros((lats.size, lons.size), dtype=np.int64)
        if jok.any() and iok.any():
            out[np.ix_(jok, iok)] = self.elevation[np.ix_(j[jok], i[iok])]
        return out

    def elevation_at(self, lat: float, lon: float) -> int:
        return int(self.sample([lat], [lon])[0, 0])

    def to_json(self) -> str:
        return json.dumps(
            [
                {"south": c.south, "north": c.north, "west": c.west, "east": c.east, "elevation": c.elevation}
                for c in self.cells
            ]
        )


def _band_cuts(lo: float, hi: float) -> list[float]:
    k = math.floor(lo / LAT_BAND_DEG) + 1
    out = []
    while k * LAT_BAND_DEG < hi:
        out.append(k * LAT_BAND_DEG)
        k += 1
    return out


def build_elevation_map(prisms: Sequence[Prism]) -> ElevationMap:
    if not prisms:
        raise NoCandidatesError("no prisms to stack")
    xs = sorted({p.footprint.west for p in prisms} | {p.footprint.east for p in prisms})
    ys = {p.footprint.south for p in prisms} | {p.footprint.north for p in prisms}
    ys = sorted(ys | set(_band_cuts(min(ys), max(ys))))
    xi = {v: k for k, v in enumerate(xs)}
    yi = {v: k for k, v in enumerate(ys)}
    ix0 = np.array([xi[p.footprint.west] for p in prisms], dtype=np.int64)
    ix1 = np.array([xi[p.footprint.east] for p in prisms], dtype=np.int64)
    iy0 = np.array([yi[p.footprint.south] for p in prisms], dtype=np.int64)
    iy1 = np.array([yi[p.footprint.north] for p in prisms], dtype=np.int64)
    h = np.array([p.height for p in prisms], dtype=np.int64)
    elev = kernels.accumulate_elevation(ix0, ix1, iy0, iy1, h, len(xs) - 1, len(ys) - 1)
    wrap = xs[0] == -180.0 and xs[-1] == 180.0
    return ElevationMap(xs, ys, elev, wrap_x=wrap)


def _region(m: ElevationMap, rows: np.ndarray, cols: np.ndarray, elevation: int) -> MaxRegion:
    ncols = m.elevation.shape[1]
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    south = m.y_cuts[rows]
    north = m.y_cuts[rows + 1]
    west = m.x_cuts[cols]
    east = m.x_cuts[cols + 1]
    mid_lat = (south + north) / 2.0
    mid_lon = (west + east) / 2.0
    if m.wrap_x and cols.min() == 0 and cols.max() == ncols - 1:
        # region continues across the antimeridian: average on the eastern side
        mid_lon = np.where(mid_lon < 0.0, mid_lon + 360.0, mid_lon)
    areas = (north - south) * (east - west) * np.cos(np.radians(mid_lat))
    total = math.fsum(areas)
    lat = math.fsum(areas * mid_lat) / total
    lon = math.fsum(areas * mid_lon) / total
    return MaxRegion(
        cells=tuple(int(r) * ncols + int(c) for r, c in zip(rows, cols)),
        elevation=elevation,
        area=total,
        centroid=GeoCoordinate(lat, normalize_longitude(lon)),
        south=float(south.min()),
        west=float(west.min()),
    )


def max_regions(m: ElevationMap) -> list[MaxRegion]:
    """Edge-connected components of the top-elevation cells, best first.

    Order: larger cos-latitude-weighted area first; ties broken by the
    smaller south, then west, corner.
    """
    top = m.max_elevation
    mask = np.ascontiguousarray(m.elevation == top, dtype=np.uint8)
    labels, count = kernels.label_components(mask, m.wrap_x)
    regions = []
    for lab in range(count):
        rows, cols = np.nonzero(labels == lab)
        regions.append(_region(m, rows, cols, top))
    if not regions:
        return regions
    best = max(r.area for r in regions)

    def key(r):
        tied = math.isclose(r.area, best, rel_tol=_AREA_TIE_RTOL)
        return (0 if tied else 1, -r.area if not tied else 0.0, r.south, r.west)

    return sorted(regions, key=key)


def _expand(lo: float, hi: float, center: float) -> tuple[float, float]:
    if hi > lo:
        return lo, hi
    half = POINT_EXPANSION_DEG / 2.0
    return center - half, center + half


def prisms_from_places(places: Sequence[WeightedPlace]) -> list[Prism]:
    """Footprints for stacking: point boxes expanded, antimeridian crossings split."""
    prisms = []
    for p in places:
        b = p.bbox
        south, north = _expand(b.south, b.north, b.south)
        south, north = max(south, -90.0), min(north, 90.0)
        if b.west == b.east:
            half = POINT_EXPANSION_DEG / 2.0
            west, east = normalize_longitude(b.west - half), normalize_longitude(b.east + half)
        else:
            west, east = b.west, b.east
        for part in split_antimeridian(GeoBoundingBox(south, north, west, east)):
            if part.east > part.west and part.north > part.south:
                prisms.append(Prism(part, int(p.weight)))
    return prisms


def gipsy_locate(places: Sequence[WeightedPlace]) -> GeoCoordinate:
    if not places:
        raise NoCandidatesError("GIPSY needs at least one place")
    m = build_elevation_map(prisms_from_places(places))
    return max_regions(m)[0].centroid
