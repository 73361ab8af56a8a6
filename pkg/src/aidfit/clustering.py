"""Initial cluster construction.

The engine accepts any starting partition; these helpers build the two
feature spaces that work well in practice (residuals of a few rough
regression fits, or projections onto the leading L2 principal components)
and run a single seeded assignment pass of k-means over them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core import AggregatedInstance, ClusterPartition
from .linalg import DataMatrix, matmul, symmetric_eigen, transpose
from .problems.lad import solve_weighted_lad

__all__ = [
    "InitialClusterConfig",
    "default_initial_cluster_count",
    "random_column_subsets",
    "residual_features",
    "pca_projection_features",
    "kmeans_one_pass",
    "build_initial_partition",
]

LARGE_FIT_THRESHOLD = 800


@dataclass(frozen=True)
class InitialClusterConfig:
    target_cluster_count: int
    feature_source: Literal["residuals", "pca_projection", "raw_data"] = "residuals"
    seed: int = 0
    model_count: int = 5
    feature_p: int | None = None
    projection_p: int = 1


def default_initial_cluster_count(n: int, k_min: int = 2) -> int:
    """One percent of the rows, clamped into [k_min, n]."""
    return max(min(math.ceil(0.01 * n), n), min(k_min, n))


def random_column_subsets(
    m: int, p: int, count: int, seed: int
) -> list[tuple[int, ...]]:
    """``count`` sorted p-subsets of 0..m-1 drawn with a PCG64 stream.

    Draw order: one ``choice(m, p, replace=False)`` call per model, in model
    order, so callers can reproduce the subsets from the seed alone.
    """
    rng = np.random.default_rng(seed)
    return [
        tuple(sorted(int(c) for c in rng.choice(m, size=p, replace=False)))
        for _ in range(count)
    ]


def _fit_lad_coefficients(targets: np.ndarray, features: np.ndarray, seed: int) -> np.ndarray:
    """Exact LAD fit; large row counts go through the aggregation driver."""
    n = features.shape[0]
    if n <= LARGE_FIT_THRESHOLD:
        agg = AggregatedInstance(
            B_agg=DataMatrix(targets.reshape(-1, 1)),
            A_agg=DataMatrix(features),
            weights=tuple([1] * n),
        )
        return solve_weighted_lad(agg).coefficients

    from .core import AidConfig, run_aid
    from .problems.definitions import LadRegressionProblem

    raw = np.hstack([features, targets.reshape(-1, 1)])
    initial = kmeans_one_pass(
        DataMatrix(raw), default_initial_cluster_count(n), seed=seed
    )
    report = run_aid(
        DataMatrix(targets.reshape(-1, 1)),
        DataMatrix(features),
        LadRegressionProblem(features.shape[1]),
        initial,
        AidConfig(tol=0.0),
    )
    return report.solution.coefficients


def residual_features(
    B: DataMatrix, A: DataMatrix, p: int, model_count: int, seed: int
) -> DataMatrix:
    """Residual columns of ``model_count`` LAD fits on random p-column subsets.

    Rows with similar residuals across the fits tend to sit on the same side
    of the eventual regression surface, which is what the initial clusters
    should capture.
    """
    if model_count < 1:
        raise ValueError("model_count must be at least 1")
    if p > A.cols:
        raise ValueError(f"p={p} exceeds the {A.cols} available columns")
    n = A.rows
    targets = B.values[:, 0]
    subsets = random_column_subsets(A.cols, p, model_count, seed)
    out = np.empty((n, model_count))
    for c, subset in enumerate(subsets):
        features = A.values[:, list(subset)]
        coeffs = _fit_lad_coefficients(targets, features, seed=seed + c + 1)
        out[:, c] = targets - features @ coeffs
    return DataMatrix(out)


def pca_projection_features(A: DataMatrix, p: int) -> DataMatrix:
    """Projections of the rows onto the top p L2 principal directions."""
    if p > A.cols:
        raise ValueError(f"p={p} exceeds the {A.cols} available columns")
    gram = matmul(transpose(A), A)
    _, eigvecs = symmetric_eigen(gram)
    top = DataMatrix(eigvecs.values[:, :p])
    return matmul(A, top)


def kmeans_one_pass(features: DataMatrix, k: int, seed: int) -> ClusterPartition:
    """Single assignment pass of k-means with seeded distinct-row centers.

    Every row joins its nearest center (ties to the lowest center index);
    centers are never updated and empty clusters are dropped.
    """
    n = features.rows
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must be in [1, {n}]")
    rng = np.random.default_rng(seed)
    center_rows = rng.choice(n, size=k, replace=False)
    vals = features.values
    centers = vals[center_rows, :]
    sq = ((vals[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(sq, axis=1)
    return ClusterPartition.from_labels(labels)


def build_initial_partition(
    B: DataMatrix | None, A: DataMatrix, config: InitialClusterConfig
) -> ClusterPartition:
    """Construct the starting partition for a run, per the configured features."""
    if config.feature_source == "residuals":
        if B is None:
            raise ValueError("residual features need target data")
        p = config.feature_p if config.feature_p is not None else A.cols
        features = residual_features(B, A, p, config.model_count, config.seed)
    elif config.feature_source == "pca_projection":
        features = pca_projection_features(A, config.projection_p)
    elif config.feature_source == "raw_data":
        features = A
    else:
        raise ValueError(f"unknown feature source {config.feature_source!r}")
    return kmeans_one_pass(features, config.target_cluster_count, config.seed)
