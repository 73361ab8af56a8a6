import numpy as np
import pytest

from aidfit.problems.lad import (
    InstanceTooLargeError,
    solve_subset_selection,
    solve_weighted_lad,
)
from conftest import make_agg
from oracles import lad_grid_oracle, lad_vertex_oracle, subset_oracle


class TestWeightedLad:
    def test_unit_weight_median_at_zero(self):
        sol = solve_weighted_lad(make_agg([0.0, 0.0, 10.0], [[1.0], [1.0], [1.0]]))
        assert sol.coefficients[0] == 0.0
        assert sol.objective == 10.0

    def test_heavy_weight_shifts_median(self):
        sol = solve_weighted_lad(
            make_agg([0.0, 0.0, 10.0], [[1.0], [1.0], [1.0]], weights=[1, 1, 3])
        )
        assert sol.coefficients[0] == 10.0
        assert sol.objective == 20.0

    def test_weighted_8x2_matches_grid_and_vertices(self, rng):
        a = rng.standard_normal((8, 2))
        b = a @ np.array([2.0, -1.0]) + rng.standard_normal(8)
        w = rng.integers(1, 5, size=8).astype(float)
        sol = solve_weighted_lad(make_agg(b, a, w))
        grid = lad_grid_oracle(b, a, w)
        assert abs(sol.objective - grid) <= 1e-3 * (1 + abs(grid))
        vertices = lad_vertex_oracle(b, a, w)
        assert abs(sol.objective - vertices) <= 1e-9

    def test_many_random_instances_match_vertex_oracle(self, rng):
        for _ in range(120):
            n = int(rng.integers(3, 10))
            m = int(rng.integers(1, min(4, n) + 1))
            a = rng.standard_normal((n, m))
            b = rng.standard_normal(n)
            w = rng.integers(1, 6, size=n).astype(float)
            sol = solve_weighted_lad(make_agg(b, a, w))
            assert abs(sol.objective - lad_vertex_oracle(b, a, w)) <= 1e-9

    def test_objective_is_recomputed(self, rng):
        a = rng.standard_normal((12, 3))
        b = rng.standard_normal(12)
        sol = solve_weighted_lad(make_agg(b, a))
        assert sol.objective == pytest.approx(
            float(np.abs(b - a @ sol.coefficients).sum()), abs=1e-9
        )

    def test_weight_scaling_scales_objective(self, rng):
        a = rng.standard_normal((9, 2))
        b = rng.standard_normal(9)
        w = rng.integers(1, 4, size=9)
        base = solve_weighted_lad(make_agg(b, a, w))
        scaled = solve_weighted_lad(make_agg(b, a, 3 * w))
        assert scaled.objective == pytest.approx(3 * base.objective, rel=1e-9)

    def test_rejects_multi_column_target(self, rng):
        agg = make_agg(rng.standard_normal((4, 2)), rng.standard_normal((4, 2)))
        with pytest.raises(ValueError):
            solve_weighted_lad(agg)


class TestSubsetSelection:
    def test_full_support_equals_unrestricted(self, rng):
        a = rng.standard_normal((10, 2))
        b = rng.standard_normal(10)
        full = solve_subset_selection(make_agg(b, a), p=2)
        unrestricted = solve_weighted_lad(make_agg(b, a))
        assert abs(full.objective - unrestricted.objective) <= 1e-9
        assert full.support == (0, 1)

    def test_exact_recovery_zero_noise(self, rng):
        a = rng.standard_normal((20, 3))
        b = 3.0 * a[:, 1]
        sol = solve_subset_selection(make_agg(b, a), p=1)
        assert sol.support == (1,)
        assert sol.objective <= 1e-12
        assert sol.coefficients[0] == 0.0 and sol.coefficients[2] == 0.0

    def test_matches_independent_enumeration(self, rng):
        for _ in range(60):
            n = int(rng.integers(4, 11))
            m = int(rng.integers(2, 5))
            p = int(rng.integers(1, m + 1))
            a = rng.standard_normal((n, m))
            b = rng.standard_normal(n)
            w = rng.integers(1, 4, size=n).astype(float)
            sol = solve_subset_selection(make_agg(b, a, w), p)
            assert abs(sol.objective - subset_oracle(b, a, w, p)) <= 1e-9
            assert len(sol.support) == p
            off = [j for j in range(m) if j not in sol.support]
            assert all(sol.coefficients[j] == 0.0 for j in off)

    def test_tie_breaks_to_lexicographic_support(self):
        # duplicated columns make every singleton support equally good
        a = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        b = np.array([1.0, 2.0, 3.0])
        sol = solve_subset_selection(make_agg(b, a), p=1)
        assert sol.support == (0,)

    def test_cap_enforced(self, rng):
        agg = make_agg(rng.standard_normal(4), rng.standard_normal((4, 30)))
        with pytest.raises(InstanceTooLargeError):
            solve_subset_selection(agg, p=15, cap=1000)

    def test_p_out_of_range(self, rng):
        agg = make_agg(rng.standard_normal(4), rng.standard_normal((4, 3)))
        with pytest.raises(ValueError):
            solve_subset_selection(agg, p=4)
