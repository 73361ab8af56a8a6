"""Problem-independent engine for L1 fitting by aggregation.

The driver keeps a partition of the data rows, solves an exact weighted
problem on per-cluster means, and checks whether every cluster agrees on
the signs of its residuals. Agreement certifies that the aggregated
optimum solves the full problem; disagreement picks the clusters to split.
"""

from __future__ import annotations

import abc
from collections import Counter
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .linalg import DataMatrix, l1_norm, sub

__all__ = [
    "PartitionError",
    "DeclusterError",
    "LowerBoundViolationError",
    "IterationLimitError",
    "SignPattern",
    "ClusterPartition",
    "AggregatedInstance",
    "SolverConfig",
    "AidConfig",
    "ProblemDefinition",
    "IterationRecord",
    "AidReport",
    "aggregate",
    "residual_signs",
    "check_optimality",
    "decluster",
    "optimality_gap",
    "run_aid",
    "validate_report",
]

SignPattern = tuple[int, ...]

DEFAULT_EPS_SIGN = 1e-9
BOUND_SLACK = 1e-9


class PartitionError(ValueError):
    """The clusters do not form a valid partition of the row indices."""


class DeclusterError(RuntimeError):
    """Internal inconsistency between the sign patterns and the split request."""


class LowerBoundViolationError(RuntimeError):
    """The aggregated bound exceeded the incumbent, which signals a buggy solver."""


class IterationLimitError(RuntimeError):
    """Raised when the loop hits the configured iteration cap.

    Carries the partial report so callers can inspect the trace.
    """

    def __init__(self, report: "AidReport"):
        super().__init__(
            f"iteration limit reached after {report.total_iterations} iterations"
        )
        self.report = report


@dataclass(frozen=True)
class ClusterPartition:
    """Exact partition of row indices 0..n-1 into nonempty clusters."""

    n: int
    clusters: tuple[tuple[int, ...], ...]
    iteration: int = 1

    def __post_init__(self):
        seen: set[int] = set()
        total = 0
        for k, cluster in enumerate(self.clusters):
            if len(cluster) == 0:
                raise PartitionError(f"cluster {k} is empty")
            if list(cluster) != sorted(cluster):
                raise PartitionError(f"cluster {k} indices are not sorted")
            total += len(cluster)
            seen.update(cluster)
        if total != self.n or seen != set(range(self.n)):
            raise PartitionError(
                f"clusters do not partition 0..{self.n - 1} exactly"
            )

    @property
    def cluster_count(self) -> int:
        return len(self.clusters)

    @staticmethod
    def singletons(n: int, iteration: int = 1) -> "ClusterPartition":
        return ClusterPartition(
            n=n, clusters=tuple((i,) for i in range(n)), iteration=iteration
        )

    @staticmethod
    def from_labels(labels: Sequence[int], iteration: int = 1) -> "ClusterPartition":
        """Build a partition from per-row cluster labels, dropping gaps."""
        groups: dict[int, list[int]] = {}
        for i, lab in enumerate(labels):
            groups.setdefault(int(lab), []).append(i)
        clusters = tuple(
            tuple(groups[lab]) for lab in sorted(groups) if groups[lab]
        )
        return ClusterPartition(n=len(labels), clusters=clusters, iteration=iteration)

    def labels(self) -> np.ndarray:
        out = np.empty(self.n, dtype=np.int64)
        for k, cluster in enumerate(self.clusters):
            out[list(cluster)] = k
        return out


@dataclass(frozen=True)
class AggregatedInstance:
    """Per-cluster mean rows of the target and feature data plus cluster sizes."""

    B_agg: DataMatrix
    A_agg: DataMatrix
    weights: tuple[int, ...]

    def __post_init__(self):
        k = len(self.weights)
        if self.B_agg.rows != k or self.A_agg.rows != k:
            raise PartitionError("aggregated row counts disagree with weights")
        if any(w <= 0 for w in self.weights):
            raise PartitionError("cluster weights must be positive")

    @property
    def cluster_count(self) -> int:
        return len(self.weights)

    @property
    def total_weight(self) -> int:
        return int(sum(self.weights))


@dataclass(frozen=True)
class SolverConfig:
    """Numeric knobs for the exact aggregated-problem solvers."""

    sphere_tol: float = 1e-7
    sphere_max_iters: int = 200_000
    subset_cap: int = 10**6
    pca_cap: int = 2**26


@dataclass(frozen=True)
class AidConfig:
    tol: float = 0.0
    eps_sign: float = DEFAULT_EPS_SIGN
    max_iters: int | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)


class ProblemDefinition(abc.ABC):
    """Contract a fitting problem must satisfy to run under the engine.

    ``apply_f`` must commute with row averaging: f(X, W A) == W f(X, A) for
    every averaging matrix W. That property is what makes per-cluster means
    a faithful stand-in for their rows.
    """

    sense: Literal["minimize", "maximize"] = "minimize"

    @property
    @abc.abstractmethod
    def q(self) -> int:
        """Number of target columns."""

    @property
    @abc.abstractmethod
    def m(self) -> int:
        """Number of feature columns."""

    @abc.abstractmethod
    def apply_f(self, solution, A: DataMatrix) -> DataMatrix:
        """Evaluate the fitted mapping at ``solution`` on feature rows ``A``."""

    @abc.abstractmethod
    def solve_weighted(self, agg: AggregatedInstance, config: SolverConfig):
        """Exactly solve the weighted problem on aggregated data.

        Returns a problem-specific solution object carrying ``objective``,
        the optimal weighted value in the problem's natural sense.
        """


@dataclass(frozen=True)
class IterationRecord:
    t: int
    cluster_count: int
    aggregated_objective: float
    objective: float
    best_objective: float
    gap: float


@dataclass(frozen=True)
class AidReport:
    """Per-iteration trace plus the returned incumbent.

    Values are reported in the problem's natural sense, so the aggregated
    objective is a nondecreasing bound for both senses and the incumbent
    only ever improves.
    """

    n: int
    sense: str
    iterations: tuple[IterationRecord, ...]
    solution: object
    termination: Literal[
        "optimality_condition", "gap_below_tol", "fully_disaggregated", "iteration_limit"
    ]

    @property
    def total_iterations(self) -> int:
        return self.iterations[-1].t

    @property
    def final_cluster_count(self) -> int:
        return self.iterations[-1].cluster_count

    @property
    def aggregation_rate(self) -> float:
        return self.final_cluster_count / self.n

    @property
    def best_objective(self) -> float:
        return self.iterations[-1].best_objective

    @property
    def final_gap(self) -> float:
        return self.iterations[-1].gap

    @property
    def converged(self) -> bool:
        return self.termination != "iteration_limit"

    @property
    def certified_optimal(self) -> bool:
        """Whether the run carries a proof of global optimality.

        Sign agreement certifies minimize-sense problems; for maximize-sense
        ones only full disaggregation (aggregated problem == original) does,
        since the aggregated value bounds the optimum from below in both
        senses.
        """
        if self.termination == "fully_disaggregated":
            return True
        if self.sense == "minimize":
            return self.termination == "optimality_condition" or self.final_gap <= 0.0
        return False


def aggregate(B: DataMatrix, A: DataMatrix, partition: ClusterPartition) -> AggregatedInstance:
    """Collapse every cluster to the entrywise mean of its rows."""
    if B.rows != partition.n or A.rows != partition.n:
        raise PartitionError(
            f"row counts {B.rows}/{A.rows} do not match partition over {partition.n} rows"
        )
    k = partition.cluster_count
    b_out = np.empty((k, B.cols))
    a_out = np.empty((k, A.cols))
    weights = []
    b_vals = B.values
    a_vals = A.values
    for idx, cluster in enumerate(partition.clusters):
        rows = np.asarray(cluster, dtype=np.int64)
        size = rows.size
        b_out[idx, :] = b_vals[rows, :].sum(axis=0) / size
        a_out[idx, :] = a_vals[rows, :].sum(axis=0) / size
        weights.append(int(size))
    return AggregatedInstance(
        B_agg=DataMatrix(b_out), A_agg=DataMatrix(a_out), weights=tuple(weights)
    )


def residual_signs(B: DataMatrix, F: DataMatrix, eps_sign: float = DEFAULT_EPS_SIGN) -> list[SignPattern]:
    """Per-row sign pattern of B - F, mapping the zero band [-eps_sign, inf) to +1."""
    if B.shape != F.shape:
        raise PartitionError(f"shape mismatch: {B.shape} vs {F.shape}")
    if eps_sign < 0:
        raise ValueError("eps_sign must be nonnegative")
    resid = B.values - F.values
    plus = resid >= -eps_sign
    return [tuple(1 if flag else -1 for flag in row) for row in plus]


def check_optimality(
    B: DataMatrix,
    A: DataMatrix,
    problem: ProblemDefinition,
    solution,
    partition: ClusterPartition,
    eps_sign: float = DEFAULT_EPS_SIGN,
) -> tuple[bool, list[int], list[SignPattern]]:
    """Test whether every cluster's rows share one residual sign pattern.

    Returns the verdict, the indices of clusters with two or more distinct
    patterns, and the per-row patterns themselves.
    """
    fitted = problem.apply_f(solution, A)
    signs = residual_signs(B, fitted, eps_sign)
    violating = []
    for k, cluster in enumerate(partition.clusters):
        first = signs[cluster[0]]
        if any(signs[i] != first for i in cluster[1:]):
            violating.append(k)
    return (len(violating) == 0), violating, signs


def _pattern_order_key(pattern: SignPattern) -> tuple[int, ...]:
    # lexicographic with +1 ordered before -1 per coordinate
    return tuple(0 if s == 1 else 1 for s in pattern)


def decluster(
    partition: ClusterPartition,
    signs: Sequence[SignPattern],
    violating: Sequence[int],
) -> ClusterPartition:
    """Split each violating cluster into its mode-pattern rows and the rest.

    Non-violating clusters are copied unchanged; the result renumbers
    clusters contiguously and increments the iteration index.
    """
    violating_set = set(violating)
    if not violating_set.issubset(range(partition.cluster_count)):
        raise DeclusterError("violating indices outside the cluster range")
    new_clusters: list[tuple[int, ...]] = []
    for k, cluster in enumerate(partition.clusters):
        if k not in violating_set:
            new_clusters.append(cluster)
            continue
        counts = Counter(signs[i] for i in cluster)
        if len(counts) < 2:
            raise DeclusterError(
                f"cluster {k} was marked violating but has a single sign pattern"
            )
        best_count = max(counts.values())
        mode = min(
            (pat for pat, cnt in counts.items() if cnt == best_count),
            key=_pattern_order_key,
        )
        mode_rows = tuple(i for i in cluster if signs[i] == mode)
        rest_rows = tuple(i for i in cluster if signs[i] != mode)
        new_clusters.append(mode_rows)
        new_clusters.append(rest_rows)
    return ClusterPartition(
        n=partition.n, clusters=tuple(new_clusters), iteration=partition.iteration + 1
    )


def optimality_gap(best_objective: float, bound: float) -> float:
    """Relative distance between the incumbent and the aggregated bound."""
    if best_objective < bound - BOUND_SLACK:
        raise LowerBoundViolationError(
            f"aggregated bound {bound} exceeds incumbent {best_objective}"
        )
    if best_objective <= 0.0:
        # a perfect fit: the bound is squeezed to zero as well
        return 0.0
    return (best_objective - bound) / best_objective


def run_aid(
    B: DataMatrix,
    A: DataMatrix,
    problem: ProblemDefinition,
    initial: ClusterPartition,
    config: AidConfig | None = None,
) -> AidReport:
    """Run the aggregate/solve/check/split loop until a stop condition fires.

    Stops when every cluster agrees on residual signs (which certifies a
    global optimum for minimize-sense problems), when the relative gap
    drops to ``config.tol``, or when the partition reaches singletons
    (the aggregated problem then equals the original). Raises
    ``IterationLimitError`` carrying the partial report if
    ``config.max_iters`` is exhausted first.
    """
    config = config or AidConfig()
    if B.rows != A.rows or B.rows != initial.n:
        raise PartitionError(
            f"B has {B.rows} rows, A has {A.rows}, partition covers {initial.n}"
        )
    if B.cols != problem.q:
        raise PartitionError(f"B has {B.cols} columns, problem expects q={problem.q}")
    if config.tol < 0:
        raise ValueError("tol must be nonnegative")

    n = initial.n
    max_iters = config.max_iters if config.max_iters is not None else n
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    flip = -1.0 if problem.sense == "maximize" else 1.0

    partition = initial
    records: list[IterationRecord] = []
    best_internal = np.inf
    best_objective = np.inf
    best_solution = None
    termination = None

    for t in range(1, max_iters + 1):
        agg = aggregate(B, A, partition)
        solution = problem.solve_weighted(agg, config.solver)
        bound = float(solution.objective)
        fitted = problem.apply_f(solution, A)
        objective = l1_norm(sub(B, fitted))
        if flip * objective < best_internal:
            best_internal = flip * objective
            best_objective = objective
            best_solution = solution
        gap = optimality_gap(best_objective, bound)
        records.append(
            IterationRecord(
                t=t,
                cluster_count=partition.cluster_count,
                aggregated_objective=bound,
                objective=objective,
                best_objective=best_objective,
                gap=gap,
            )
        )
        satisfied, violating, signs = check_optimality(
            B, A, problem, solution, partition, config.eps_sign
        )
        if satisfied:
            termination = (
                "fully_disaggregated"
                if partition.cluster_count == n
                else "optimality_condition"
            )
            break
        if gap <= config.tol:
            termination = "gap_below_tol"
            break
        partition = decluster(partition, signs, violating)

    if termination is None:
        report = AidReport(
            n=n,
            sense=problem.sense,
            iterations=tuple(records),
            solution=best_solution,
            termination="iteration_limit",
        )
        raise IterationLimitError(report)

    return AidReport(
        n=n,
        sense=problem.sense,
        iterations=tuple(records),
        solution=best_solution,
        termination=termination,
    )


def validate_report(report: AidReport, tol: float | None = None) -> None:
    """Re-check the trace invariants; raises ValueError on any violation."""
    flip = -1.0 if report.sense == "maximize" else 1.0
    prev_bound = -np.inf
    prev_best = np.inf
    for rec in report.iterations:
        if rec.aggregated_objective < prev_bound - BOUND_SLACK:
            raise ValueError(f"aggregated bound decreased at t={rec.t}")
        prev_bound = max(prev_bound, rec.aggregated_objective)
        if flip * rec.best_objective > prev_best + BOUND_SLACK:
            raise ValueError(f"incumbent worsened at t={rec.t}")
        prev_best = min(prev_best, flip * rec.best_objective)
        if rec.best_objective < rec.aggregated_objective - BOUND_SLACK:
            raise ValueError(f"bound above incumbent at t={rec.t}")
        if rec.best_objective > 0:
            expect = (rec.best_objective - rec.aggregated_objective) / rec.best_objective
            if abs(expect - rec.gap) > 1e-12:
                raise ValueError(f"gap mismatch at t={rec.t}")
    if tol is not None and report.converged and report.final_gap > tol + 1e-12:
        if report.termination == "gap_below_tol":
            raise ValueError("terminated on gap but final gap exceeds tol")
