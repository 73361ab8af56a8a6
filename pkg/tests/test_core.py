import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aidfit.core import (
    AggregatedInstance,
    AidConfig,
    ClusterPartition,
    DeclusterError,
    IterationLimitError,
    LowerBoundViolationError,
    PartitionError,
    aggregate,
    check_optimality,
    decluster,
    optimality_gap,
    residual_signs,
    run_aid,
    validate_report,
)
from aidfit.linalg import DataMatrix, matmul
from aidfit.problems import (
    LadRegressionProblem,
    PcaProjectionProblem,
    SphereRegressionProblem,
    SubsetSelectionProblem,
    solve_weighted_lad,
)
from conftest import make_agg
from oracles import cluster_means, lad_vertex_oracle, pattern_group_check


def random_partition(rng, n, k) -> ClusterPartition:
    labels = rng.integers(0, k, size=n)
    labels[rng.choice(n, size=min(k, n), replace=False)] = np.arange(min(k, n))
    return ClusterPartition.from_labels(labels)


class TestClusterPartition:
    def test_rejects_empty_cluster(self):
        with pytest.raises(PartitionError):
            ClusterPartition(n=2, clusters=((0, 1), ()))

    def test_rejects_overlap(self):
        with pytest.raises(PartitionError):
            ClusterPartition(n=3, clusters=((0, 1), (1, 2)))

    def test_rejects_missing_index(self):
        with pytest.raises(PartitionError):
            ClusterPartition(n=3, clusters=((0, 1),))

    def test_rejects_unsorted(self):
        with pytest.raises(PartitionError):
            ClusterPartition(n=2, clusters=((1, 0),))

    def test_singletons(self):
        p = ClusterPartition.singletons(4)
        assert p.cluster_count == 4
        assert p.labels().tolist() == [0, 1, 2, 3]

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 40), st.integers(1, 8), st.integers(0, 10_000))
    def test_from_labels_always_valid(self, n, k, seed):
        rng = np.random.default_rng(seed)
        p = random_partition(rng, n, min(k, n))
        assert sorted(i for c in p.clusters for i in c) == list(range(n))


class TestAggregate:
    def test_mean_of_two_rows(self):
        b = DataMatrix([[1.0, 3.0], [5.0, 7.0]])
        a = DataMatrix([[0.0], [2.0]])
        agg = aggregate(b, a, ClusterPartition(n=2, clusters=((0, 1),)))
        assert agg.B_agg.values.tolist() == [[3.0, 5.0]]
        assert agg.A_agg.values.tolist() == [[1.0]]
        assert agg.weights == (2,)

    def test_singleton_partition_is_identity(self, rng):
        b = DataMatrix(rng.standard_normal((5, 2)))
        a = DataMatrix(rng.standard_normal((5, 3)))
        agg = aggregate(b, a, ClusterPartition.singletons(5))
        assert agg.B_agg == b
        assert agg.A_agg == a
        assert agg.weights == (1,) * 5

    def test_matches_mean_oracle(self, rng):
        b = rng.standard_normal((10, 3))
        a = rng.standard_normal((10, 2))
        part = random_partition(rng, 10, 3)
        agg = aggregate(DataMatrix(b), DataMatrix(a), part)
        ref_b = cluster_means(b, part.clusters)
        ref_a = cluster_means(a, part.clusters)
        assert np.abs(agg.B_agg.values - ref_b).max() <= 1e-12
        assert np.abs(agg.A_agg.values - ref_a).max() <= 1e-12
        assert sum(agg.weights) == 10

    def test_row_count_mismatch(self, rng):
        b = DataMatrix(rng.standard_normal((4, 1)))
        a = DataMatrix(rng.standard_normal((5, 2)))
        with pytest.raises(PartitionError):
            aggregate(b, a, ClusterPartition.singletons(5))

    def test_weights_validated(self):
        with pytest.raises(PartitionError):
            AggregatedInstance(
                B_agg=DataMatrix([[0.0]]), A_agg=DataMatrix([[0.0]]), weights=(0,)
            )


class TestResidualSigns:
    def test_direct_signs(self):
        signs = residual_signs(
            DataMatrix([[2.0, -3.0]]), DataMatrix([[0.0, 0.0]]), eps_sign=0.0
        )
        assert signs == [(1, -1)]

    def test_zero_maps_to_plus(self):
        signs = residual_signs(DataMatrix([[0.0, 0.0]]), DataMatrix([[0.0, 0.0]]))
        assert signs == [(1, 1)]

    def test_zero_band(self):
        signs = residual_signs(
            DataMatrix([[-1e-12, 5.0]]), DataMatrix([[0.0, 0.0]]), eps_sign=1e-9
        )
        assert signs == [(1, 1)]

    def test_shape_mismatch(self):
        with pytest.raises(PartitionError):
            residual_signs(DataMatrix([[1.0]]), DataMatrix([[1.0, 2.0]]))

    def test_negative_eps_rejected(self):
        with pytest.raises(ValueError):
            residual_signs(DataMatrix([[1.0]]), DataMatrix([[1.0]]), eps_sign=-1.0)


class TestCheckOptimality:
    def test_uniform_positive_residuals(self, rng):
        a = rng.standard_normal((6, 2))
        b = a @ np.array([1.0, 2.0]) + 1.0  # all residuals +1 at the true coefficients
        prob = LadRegressionProblem(2)
        sol = type("S", (), {"coefficients": np.array([1.0, 2.0]), "objective": 6.0})()
        ok, violating, signs = check_optimality(
            DataMatrix(b.reshape(-1, 1)),
            DataMatrix(a),
            prob,
            sol,
            ClusterPartition(n=6, clusters=(tuple(range(6)),)),
        )
        assert ok and violating == [] and all(s == (1,) for s in signs)

    def test_mixed_cluster_detected(self):
        b = DataMatrix([[1.0], [-1.0]])
        a = DataMatrix([[1.0], [1.0]])
        prob = LadRegressionProblem(1)
        sol = type("S", (), {"coefficients": np.array([0.0]), "objective": 2.0})()
        ok, violating, _ = check_optimality(
            b, a, prob, sol, ClusterPartition(n=2, clusters=((0, 1),))
        )
        assert not ok and violating == [0]

    def test_matches_grouping_oracle(self, rng):
        n = 20
        a = rng.standard_normal((n, 2))
        b = rng.standard_normal((n, 1))
        part = random_partition(rng, n, 5)
        prob = LadRegressionProblem(2)
        sol = type("S", (), {"coefficients": rng.standard_normal(2), "objective": 0.0})()
        ok, violating, signs = check_optimality(
            DataMatrix(b), DataMatrix(a), prob, sol, part
        )
        ref = pattern_group_check(signs, part.clusters)
        assert violating == ref
        assert ok == (len(ref) == 0)


class TestDecluster:
    def test_traced_split(self):
        # patterns: rows 0..3 -> (+,+), (+,-), (+,-), (-,+); mode is (+,-)
        signs = [(1, 1), (1, -1), (1, -1), (-1, 1)]
        part = ClusterPartition(n=4, clusters=((0, 1, 2, 3),))
        out = decluster(part, signs, [0])
        assert out.clusters == ((1, 2), (0, 3))
        assert out.iteration == part.iteration + 1

    def test_no_violators_is_noop_except_iteration(self):
        part = ClusterPartition(n=3, clusters=((0, 1), (2,)), iteration=4)
        out = decluster(part, [(1,), (1,), (1,)], [])
        assert out.clusters == part.clusters
        assert out.iteration == 5

    def test_tie_break_exhaustive_two_pattern_ties(self):
        # every unordered pair of distinct q=2 patterns, two rows each
        patterns = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
        order = {p: i for i, p in enumerate(patterns)}  # +1 sorts before -1
        for i in range(4):
            for j in range(i + 1, 4):
                signs = [patterns[i], patterns[j], patterns[i], patterns[j]]
                part = ClusterPartition(n=4, clusters=((0, 1, 2, 3),))
                out = decluster(part, signs, [0])
                mode = patterns[min(i, j, key=lambda t: order[patterns[t]])]
                mode_rows = tuple(k for k in range(4) if signs[k] == mode)
                assert out.clusters[0] == mode_rows

    def test_single_pattern_violator_rejected(self):
        part = ClusterPartition(n=2, clusters=((0, 1),))
        with pytest.raises(DeclusterError):
            decluster(part, [(1,), (1,)], [0])

    def test_bad_cluster_index_rejected(self):
        part = ClusterPartition(n=2, clusters=((0, 1),))
        with pytest.raises(DeclusterError):
            decluster(part, [(1,), (-1,)], [3])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 30), st.integers(0, 9999))
    def test_partition_stays_valid_and_grows(self, n, seed):
        rng = np.random.default_rng(seed)
        part = random_partition(rng, n, max(1, n // 4))
        signs = [tuple(1 if v else -1 for v in rng.integers(0, 2, 2)) for _ in range(n)]
        violating = pattern_group_check(signs, part.clusters)
        out = decluster(part, signs, violating)
        assert sorted(i for c in out.clusters for i in c) == list(range(n))
        assert out.cluster_count == part.cluster_count + len(violating)
        assert out.cluster_count <= 2 * part.cluster_count


class TestOptimalityGap:
    def test_direct_value(self):
        assert abs(optimality_gap(110.0, 100.0) - 0.09090909090909091) <= 1e-12

    def test_equal_is_zero(self):
        assert optimality_gap(5.0, 5.0) == 0.0

    def test_perfect_fit_convention(self):
        assert optimality_gap(0.0, 0.0) == 0.0

    def test_bound_violation_raises(self):
        with pytest.raises(LowerBoundViolationError):
            optimality_gap(1.0, 2.0)

    def test_tiny_violation_tolerated(self):
        assert optimality_gap(1.0, 1.0 + 1e-10) < 0


def lad_instance(rng, n=40, m=3):
    a = rng.standard_normal((n, m))
    b = a @ rng.uniform(0, 10, m) + rng.standard_normal(n)
    return DataMatrix(b.reshape(-1, 1)), DataMatrix(a)


class TestRunAid:
    def test_singleton_initial_terminates_immediately(self, rng):
        b, a = lad_instance(rng, n=25)
        prob = LadRegressionProblem(3)
        report = run_aid(b, a, prob, ClusterPartition.singletons(25), AidConfig(tol=0.0))
        assert report.total_iterations == 1
        assert report.termination == "fully_disaggregated"
        assert report.final_gap <= 1e-12
        direct = solve_weighted_lad(make_agg(b.values, a.values))
        assert abs(report.best_objective - direct.objective) <= 1e-9

    def test_tol_zero_reaches_direct_optimum(self, rng):
        n = 30
        a = rng.standard_normal((n, 3))
        b = a @ np.array([3.0, -2.0, 5.0]) + rng.standard_normal(n)
        prob = LadRegressionProblem(3)
        part = ClusterPartition.from_labels([i % 3 for i in range(n)])
        report = run_aid(DataMatrix(b.reshape(-1, 1)), DataMatrix(a), prob, part)
        ref = lad_vertex_oracle(b, a, np.ones(n))
        assert abs(report.best_objective - ref) <= 1e-9

    def test_bound_sequence_nondecreasing(self, rng):
        for seed in range(5):
            local = np.random.default_rng(seed)
            b, a = lad_instance(local, n=60, m=2)
            part = random_partition(local, 60, 4)
            report = run_aid(b, a, LadRegressionProblem(2), part)
            bounds = [r.aggregated_objective for r in report.iterations]
            assert all(
                later >= earlier - 1e-9 for earlier, later in zip(bounds, bounds[1:])
            )
            validate_report(report)

    def test_cluster_count_strictly_grows(self, rng):
        b, a = lad_instance(rng, n=80, m=2)
        part = random_partition(rng, 80, 3)
        report = run_aid(b, a, LadRegressionProblem(2), part)
        counts = [r.cluster_count for r in report.iterations]
        assert all(c2 > c1 for c1, c2 in zip(counts, counts[1:]))
        assert all(c2 <= 2 * c1 for c1, c2 in zip(counts, counts[1:]))

    def test_iteration_limit_carries_partial_report(self, rng):
        b, a = lad_instance(rng, n=60, m=3)
        part = ClusterPartition(n=60, clusters=(tuple(range(60)),))
        with pytest.raises(IterationLimitError) as err:
            run_aid(b, a, LadRegressionProblem(3), part, AidConfig(max_iters=1))
        assert err.value.report.termination == "iteration_limit"
        assert not err.value.report.converged
        assert len(err.value.report.iterations) == 1
        validate_report(err.value.report)

    def test_zero_max_iters_rejected(self, rng):
        b, a = lad_instance(rng, n=5)
        with pytest.raises(ValueError):
            run_aid(
                b, a, LadRegressionProblem(3), ClusterPartition.singletons(5),
                AidConfig(max_iters=0),
            )

    def test_gap_termination_respects_tol(self, rng):
        b, a = lad_instance(rng, n=100, m=3)
        part = random_partition(rng, 100, 2)
        report = run_aid(b, a, LadRegressionProblem(3), part, AidConfig(tol=0.05))
        assert report.final_gap <= 0.05 + 1e-12
        validate_report(report, tol=0.05)

    def test_shape_validation(self, rng):
        b, a = lad_instance(rng, n=10)
        with pytest.raises(PartitionError):
            run_aid(b, a, LadRegressionProblem(3), ClusterPartition.singletons(9))


class TestAveragingCommutation:
    """f(X, W A) == W f(X, A) for every problem's mapping."""

    def _averaging_matrix(self, part: ClusterPartition) -> DataMatrix:
        w = np.zeros((part.cluster_count, part.n))
        for k, cluster in enumerate(part.clusters):
            w[k, list(cluster)] = 1.0 / len(cluster)
        return DataMatrix(w)

    @pytest.mark.parametrize("problem_name", ["lad", "subset", "sphere", "pca"])
    def test_commutes_with_averaging(self, problem_name, rng):
        n, m = 12, 3
        for _ in range(60):
            a = DataMatrix(rng.standard_normal((n, m)))
            part = random_partition(rng, n, 4)
            w = self._averaging_matrix(part)
            if problem_name == "pca":
                prob = PcaProjectionProblem(m, 2)
                g = rng.standard_normal((m, 2))
                q, _ = np.linalg.qr(g)
                sol = type("S", (), {"components": DataMatrix(q)})()
            else:
                prob = {
                    "lad": LadRegressionProblem(m),
                    "subset": SubsetSelectionProblem(m, 2),
                    "sphere": SphereRegressionProblem(m, 4.0),
                }[problem_name]
                x = rng.standard_normal(m)
                if problem_name == "subset":
                    x[rng.choice(m)] = 0.0
                if problem_name == "sphere":
                    x = x / np.linalg.norm(x) * 1.5
                sol = type("S", (), {"coefficients": x})()
            left = prob.apply_f(sol, matmul(w, a)).values
            right = matmul(w, prob.apply_f(sol, a)).values
            assert np.abs(left - right).max() <= 1e-10
