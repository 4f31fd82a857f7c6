"""
Core domain types, parameter tables and experiment configuration.
"""

from .loader import ModelConfig, VhSettings, load_config, parse_config
from .params import (
    COMPARTMENTS,
    CompartmentState,
    GlobalParams,
    MigrationMatrix,
    RegionParams,
)
from .plan import AllocationPlan
from .supply import SupplySchedule, resolve_supply_schedule

__all__ = [
    "COMPARTMENTS",
    "AllocationPlan",
    "CompartmentState",
    "GlobalParams",
    "MigrationMatrix",
    "ModelConfig",
    "RegionParams",
    "SupplySchedule",
    "VhSettings",
    "load_config",
    "parse_config",
    "resolve_supply_schedule",
]
