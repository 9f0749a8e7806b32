from .kernels import BACKEND
from .overlay import (
    Cell,
    ElevationMap,
    MaxRegion,
    Prism,
    build_elevation_map,
    gipsy_locate,
    max_regions,
    prisms_from_places,
)

__all__ = [
    "BACKEND",
    "Cell",
    "ElevationMap",
    "MaxRegion",
    "Prism",
    "build_elevation_map",
    "gipsy_locate",
    "max_regions",
    "prisms_from_places",
]
