"""
Multi-stage stochastic ventilator allocation: MILP construction, MPS I/O,
external solver adapters and the brute-force oracle.
"""

from .builder import build_milp, complete_solution_from_plan, expected_model_size, ventilator_bounds
from .fairness import Equal, EquityK, FairnessMode, ProportionalZeta, Utilitarian, parse_fairness
from .instance import (
    BruteForceSolver,
    Instance,
    MilpSolver,
    build_instance_milp,
    export_report,
    prepare_instance,
)
from .milp import BINARY, CONTINUOUS, INTEGER, MilpModel, Violation
from .mps import NameMap, emit_mps, load_name_map, parse_mps
from .oracle import allocation_options, brute_force_solve, search_space_size
from .solvers import (
    CbcAdapter,
    GenericAdapter,
    SolveOptions,
    SolveReport,
    SolveStatus,
    SolverAdapter,
    make_adapter,
    solve,
)

__all__ = [
    "BINARY",
    "CONTINUOUS",
    "INTEGER",
    "BruteForceSolver",
    "CbcAdapter",
    "Equal",
    "EquityK",
    "FairnessMode",
    "GenericAdapter",
    "Instance",
    "MilpModel",
    "MilpSolver",
    "NameMap",
    "ProportionalZeta",
    "SolveOptions",
    "SolveReport",
    "SolveStatus",
    "SolverAdapter",
    "Utilitarian",
    "Violation",
    "allocation_options",
    "brute_force_solve",
    "build_instance_milp",
    "build_milp",
    "complete_solution_from_plan",
    "emit_mps",
    "expected_model_size",
    "export_report",
    "load_name_map",
    "make_adapter",
    "parse_fairness",
    "parse_mps",
    "prepare_instance",
    "search_space_size",
    "solve",
    "ventilator_bounds",
]
