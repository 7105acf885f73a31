"""Temporary-migration statistics from call detail records.

The package turns raw ``user,timestamp,tower`` event streams into
half-month migration departure, return and stock tables: location
inference (hourly/daily/monthly modes), multi-scale stay detection,
gap-aware aggregation with observation statuses, and post-stratification
weighting.  A synthetic-corpus generator and a brute-force oracle make the
whole stack verifiable end to end.
"""

from .aggregate import AggregationParams, MigrationTable, UserTimeline, aggregate, exclude_edges
from .ingest import FilterConstraints, ObservationProfile, SUBSET_A, SUBSET_B
from .network import LocationNetwork, Tower, build_network, assign_regions
from .segments import DetectionParams, MacroSegment, MesoSegment, MigrationEvent
from .synth import GroundTruth, ScenarioConfig, ThinningSpec, generate
from .timeutil import HalfMonth, halfmonth_of, halfmonths_between

__version__ = "0.1.0"

__all__ = [
    "AggregationParams",
    "DetectionParams",
    "FilterConstraints",
    "GroundTruth",
    "HalfMonth",
    "LocationNetwork",
    "MacroSegment",
    "MesoSegment",
    "MigrationEvent",
    "MigrationTable",
    "ObservationProfile",
    "ScenarioConfig",
    "SUBSET_A",
    "SUBSET_B",
    "ThinningSpec",
    "Tower",
    "UserTimeline",
    "aggregate",
    "assign_regions",
    "build_network",
    "exclude_edges",
    "generate",
    "halfmonth_of",
    "halfmonths_between",
]
