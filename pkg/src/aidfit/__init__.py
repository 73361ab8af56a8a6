"""Exact L1-norm error fitting through aggregation with iterative refinement.

The package solves least-absolute-deviations regression (plain, best-subset,
and ball-constrained) and projected-deviation L1 PCA by repeatedly solving a
small weighted problem on cluster means, certifying via residual-sign
agreement, and splitting disagreeing clusters.
"""

__version__ = "0.1.0"

from .core import (
    AidConfig,
    AidReport,
    AggregatedInstance,
    ClusterPartition,
    ProblemDefinition,
    SolverConfig,
    aggregate,
    check_optimality,
    decluster,
    optimality_gap,
    residual_signs,
    run_aid,
)
from .linalg import DataMatrix, l1_norm, matmul, symmetric_eigen, thin_svd

__all__ = [
    "__version__",
    "DataMatrix",
    "matmul",
    "l1_norm",
    "symmetric_eigen",
    "thin_svd",
    "ClusterPartition",
    "AggregatedInstance",
    "SolverConfig",
    "AidConfig",
    "ProblemDefinition",
    "AidReport",
    "aggregate",
    "residual_signs",
    "check_optimality",
    "decluster",
    "optimality_gap",
    "run_aid",
]
