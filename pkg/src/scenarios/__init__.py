"""
Vaccine-hesitancy process fitting and scenario-tree construction.
"""

from .process import VhProcess, fit_vh_process, fit_vh_process_from_csv
from .tree import (
    BRANCH_OFFSETS,
    ScenarioTree,
    TreeNode,
    VhPaths,
    build_tree,
    expected_value_tree,
    realize_vh_paths,
)

__all__ = [
    "BRANCH_OFFSETS",
    "ScenarioTree",
    "TreeNode",
    "VhPaths",
    "VhProcess",
    "build_tree",
    "expected_value_tree",
    "fit_vh_process",
    "fit_vh_process_from_csv",
    "realize_vh_paths",
]
