"""Exact weighted least-absolute-deviations regression and subset selection.

The regression is solved as a linear program over split variables (positive
and negative parts of the coefficients and of the per-row residuals), which
always admits a starting basis of residual columns, so no phase-1 is needed.
Subset selection enumerates every support of the requested size and solves
the restricted regression exactly for each.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from ..core import AggregatedInstance
from .simplex import primal_simplex

__all__ = [
    "RegressionSolution",
    "SubsetSolution",
    "InstanceTooLargeError",
    "weighted_lad_lp",
    "solve_weighted_lad",
    "solve_subset_selection",
]


class InstanceTooLargeError(RuntimeError):
    """An enumeration budget would be exceeded."""


@dataclass(frozen=True)
class RegressionSolution:
    coefficients: np.ndarray
    objective: float


@dataclass(frozen=True)
class SubsetSolution:
    support: tuple[int, ...]
    coefficients: np.ndarray
    objective: float


def weighted_lad_lp(
    b: np.ndarray, a: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float]:
    """Minimize ``sum_i w_i |b_i - a_i @ x|`` exactly.

    Returns the coefficient vector, the duals of the residual constraints
    (oriented for the rows as given), and the recomputed objective.
    """
    n, m = a.shape
    if b.shape != (n,):
        raise ValueError(f"target must have shape ({n},), got {b.shape}")
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")

    # columns: x+ (m), x- (m), e+ (n), e- (n)
    flip = np.where(b < 0, -1.0, 1.0)
    a_eq = np.zeros((n, 2 * m + 2 * n))
    a_eq[:, :m] = a * flip[:, None]
    a_eq[:, m : 2 * m] = -a * flip[:, None]
    a_eq[np.arange(n), 2 * m + np.arange(n)] = -flip
    a_eq[np.arange(n), 2 * m + n + np.arange(n)] = flip
    rhs = b * flip

    cost = np.zeros(2 * m + 2 * n)
    cost[2 * m :] = np.concatenate([weights, weights])

    basis = [2 * m + n + i if flip[i] > 0 else 2 * m + i for i in range(n)]
    result = primal_simplex(a_eq, rhs, cost, basis)

    x = result.x[:m] - result.x[m : 2 * m]
    objective = float(weights @ np.abs(b - a @ x))
    duals = result.duals * flip
    return x, duals, objective


def solve_weighted_lad(agg: AggregatedInstance) -> RegressionSolution:
    """Globally optimal weighted LAD coefficients for an aggregated instance."""
    if agg.B_agg.cols != 1:
        raise ValueError("weighted LAD expects a single target column")
    b = agg.B_agg.values[:, 0]
    a = agg.A_agg.values
    w = np.asarray(agg.weights, dtype=float)
    x, _, objective = weighted_lad_lp(b, a, w)
    return RegressionSolution(coefficients=x, objective=objective)


def solve_subset_selection(
    agg: AggregatedInstance, p: int, cap: int = 10**6
) -> SubsetSolution:
    """Exact best-subset LAD: try every support of size p, keep the best.

    Supports are scanned in lexicographic order and only strict objective
    improvements replace the incumbent, so equal-objective ties resolve to
    the lexicographically smallest support.
    """
    m = agg.A_agg.cols
    if not 1 <= p <= m:
        raise ValueError(f"subset size p={p} must be in [1, {m}]")
    n_supports = comb(m, p)
    if n_supports > cap:
        raise InstanceTooLargeError(
            f"{n_supports} supports exceed the enumeration cap {cap}"
        )

    b = agg.B_agg.values[:, 0]
    a = agg.A_agg.values
    w = np.asarray(agg.weights, dtype=float)

    best: SubsetSolution | None = None
    for support in combinations(range(m), p):
        cols = list(support)
        x_sub, _, objective = weighted_lad_lp(b, a[:, cols], w)
        if best is None or objective < best.objective:
            x_full = np.zeros(m)
            x_full[cols] = x_sub
            best = SubsetSolution(
                support=support, coefficients=x_full, objective=objective
            )
    assert best is not None
    return best
