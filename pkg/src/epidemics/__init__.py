"""
SVEIHR dynamics, scenario simulation and demand extraction.
"""

from .demand import DemandStream, Observables, extract_demand_streams, observables
from .model import DynamicsParams, StepResult, admissions, force_of_infection, step
from .simulator import Trajectory, simulate, ventilator_path

__all__ = [
    "DemandStream",
    "DynamicsParams",
    "Observables",
    "StepResult",
    "Trajectory",
    "admissions",
    "extract_demand_streams",
    "force_of_infection",
    "observables",
    "simulate",
    "step",
    "ventilator_path",
]
