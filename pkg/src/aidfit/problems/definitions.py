"""Concrete fitting problems pluggable into the aggregation engine."""

from __future__ import annotations

import numpy as np

from ..core import AggregatedInstance, ProblemDefinition, SolverConfig
from ..linalg import DataMatrix, matmul
from .lad import (
    RegressionSolution,
    SubsetSolution,
    solve_subset_selection,
    solve_weighted_lad,
)
from .pca import PcaSolution, solve_weighted_l1pca
from .sphere import SphereSolution, solve_sphere_lad

__all__ = [
    "LadRegressionProblem",
    "SubsetSelectionProblem",
    "SphereRegressionProblem",
    "PcaProjectionProblem",
]


class _LinearMapMixin:
    """Shared f(X, A) = A X evaluation for coefficient-vector solutions."""

    def apply_f(self, solution, A: DataMatrix) -> DataMatrix:
        coeffs = np.asarray(solution.coefficients, dtype=float).reshape(-1, 1)
        return matmul(A, DataMatrix(coeffs))


class LadRegressionProblem(_LinearMapMixin, ProblemDefinition):
    """Plain least-absolute-deviations regression, one target column."""

    sense = "minimize"

    def __init__(self, m: int):
        self._m = m

    @property
    def q(self) -> int:
        return 1

    @property
    def m(self) -> int:
        return self._m

    def solve_weighted(self, agg: AggregatedInstance, config: SolverConfig) -> RegressionSolution:
        return solve_weighted_lad(agg)


class SubsetSelectionProblem(_LinearMapMixin, ProblemDefinition):
    """LAD regression restricted to exactly p nonzero coefficients."""

    sense = "minimize"

    def __init__(self, m: int, p: int):
        if not 1 <= p <= m:
            raise ValueError(f"p={p} out of range for m={m}")
        self._m = m
        self.p = p

    @property
    def q(self) -> int:
        return 1

    @property
    def m(self) -> int:
        return self._m

    def solve_weighted(self, agg: AggregatedInstance, config: SolverConfig) -> SubsetSolution:
        return solve_subset_selection(agg, self.p, cap=config.subset_cap)


class SphereRegressionProblem(_LinearMapMixin, ProblemDefinition):
    """LAD regression with the coefficients confined to a Euclidean ball."""

    sense = "minimize"

    def __init__(self, m: int, radius: float):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self._m = m
        self.radius = radius

    @property
    def q(self) -> int:
        return 1

    @property
    def m(self) -> int:
        return self._m

    def solve_weighted(self, agg: AggregatedInstance, config: SolverConfig) -> SphereSolution:
        return solve_sphere_lad(
            agg,
            radius=self.radius,
            tol=config.sphere_tol,
            max_iters=config.sphere_max_iters,
        )


class PcaProjectionProblem(ProblemDefinition):
    """L1-norm PCA maximizing projected deviation; target matrix is zero."""

    sense = "maximize"

    def __init__(self, m: int, p: int):
        if p not in (1, 2):
            raise ValueError("p must be 1 or 2")
        self._m = m
        self.p = p

    @property
    def q(self) -> int:
        return self.p

    @property
    def m(self) -> int:
        return self._m

    def apply_f(self, solution: PcaSolution, A: DataMatrix) -> DataMatrix:
        return matmul(A, solution.components)

    def solve_weighted(self, agg: AggregatedInstance, config: SolverConfig) -> PcaSolution:
        return solve_weighted_l1pca(agg, self.p, cap=config.pca_cap)

    def zero_target(self, n: int) -> DataMatrix:
        return DataMatrix(np.zeros((n, self.p)))
