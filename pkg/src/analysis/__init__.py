"""
Experiment analysis: value of the stochastic solution, calibration,
error metrics, regression and parameter sweeps.
"""

from .calibration import FitReport, ObservedSeries, apply_candidate, calibrate
from .metrics import ErrorMetrics, error_metrics, metrics_table, safe_error_metrics
from .regression import OlsResult, adjusted_r2, collinear_columns, ols_fit
from .sweeps import (
    SweepCell,
    SweepResult,
    fairness_cells,
    fairness_properties,
    run_fairness_sweep,
    run_sweeps,
    run_timing_sweep,
    timing_cells,
)
from .vss import StageFailure, VssReport, check_vss_invariants, compute_vss

__all__ = [
    "ErrorMetrics",
    "FitReport",
    "ObservedSeries",
    "OlsResult",
    "StageFailure",
    "SweepCell",
    "SweepResult",
    "VssReport",
    "adjusted_r2",
    "apply_candidate",
    "calibrate",
    "check_vss_invariants",
    "collinear_columns",
    "compute_vss",
    "error_metrics",
    "fairness_cells",
    "fairness_properties",
    "metrics_table",
    "ols_fit",
    "run_fairness_sweep",
    "run_sweeps",
    "run_timing_sweep",
    "safe_error_metrics",
    "timing_cells",
]
