"""
Data loading and county-to-region aggregation.
"""

from .loader import (
    DataLoader,
    apply_capacity,
    load_capacity,
    load_county_table,
    load_migration,
    load_observations,
    load_region_series,
    load_vh_series,
    region_series_frame,
    vh_series_frame,
)
from .processor import RegionalData, aggregate_to_regions

__all__ = [
    "DataLoader",
    "RegionalData",
    "aggregate_to_regions",
    "apply_capacity",
    "load_capacity",
    "load_county_table",
    "load_migration",
    "load_observations",
    "load_region_series",
    "load_vh_series",
    "region_series_frame",
    "vh_series_frame",
]
