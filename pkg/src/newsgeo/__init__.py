"""Locate news-described events in satellite imagery.

Three geocoders are provided: a mention-weighted ECEF centroid, GIPSY
weighted prism stacking, and an iterative agent loop that proposes,
geocodes, fetches and verifies one candidate location at a time.
"""

from .centroid import weighted_centroid
from .extraction import ArticleRecord, Gazetteer, extract_weighted_places, load_gazetteer
from .geo import GeoBoundingBox, GeoCoordinate, WeightedPlace, ecef_to_geodetic, geodetic_to_ecef
from .gipsy import gipsy_locate
from .pipeline import PipelineConfig, PipelineResult, compute_metrics, run_batch

__version__ = "0.1.0"

__all__ = [
    "ArticleRecord",
    "Gazetteer",
    "GeoBoundingBox",
    "GeoCoordinate",
    "PipelineConfig",
    "PipelineResult",
    "WeightedPlace",
    "compute_metrics",
    "ecef_to_geodetic",
    "extract_weighted_places",
    "geodetic_to_ecef",
    "gipsy_locate",
    "load_gazetteer",
    "run_batch",
    "weighted_centroid",
]
