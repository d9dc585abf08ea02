"""Fire containment on trees and non-uniform k-center on metrics, with exact arithmetic."""

from .errors import (FireContainError, MalformedInput, NoSolutionFound, ParameterOutOfRange,
                     PreconditionViolated, ResourceCap)
from .nukc import MetricSpace, SnukcInstance, exhaustive_nukc, solve_nukc, solve_snukc
from .pipeline_tree import solve_rmfc, solve_srmfc
from .tree_core import INFINITE, RmfcInstance, RootedTree, SrmfcInstance, build_tree

__all__ = [
    "FireContainError", "MalformedInput", "NoSolutionFound", "ParameterOutOfRange",
    "PreconditionViolated", "ResourceCap", "MetricSpace", "SnukcInstance", "exhaustive_nukc",
    "solve_nukc", "solve_snukc", "solve_rmfc", "solve_srmfc", "INFINITE", "RmfcInstance",
    "RootedTree", "SrmfcInstance", "build_tree",
]
