import numpy as np
import pytest

from aidfit.data_io import (
    CsvFormatError,
    SyntheticSpec,
    generate_instance,
    generate_pca_sample,
    generate_regression,
    load_instance_bundle,
    read_csv_matrix,
    standardize_columns,
    write_csv_matrix,
    write_instance_bundle,
)
from aidfit.linalg import DataMatrix
from aidfit.problems.lad import solve_subset_selection, solve_weighted_lad
from conftest import make_agg


class TestGeneration:
    def test_noiseless_full_support_fits_exactly(self):
        spec = SyntheticSpec(n=40, m=4, informative_p=4, noise_sigma=0.0, seed=5)
        a, b, coeffs = generate_regression(spec)
        sol = solve_weighted_lad(make_agg(b.values, a.values))
        assert sol.objective <= 1e-9
        assert np.abs(sol.coefficients - coeffs).max() <= 1e-6

    def test_fixed_seed_bit_identical(self):
        spec = SyntheticSpec(n=25, m=3, informative_p=2, seed=123)
        a1, b1, c1 = generate_regression(spec)
        a2, b2, c2 = generate_regression(spec)
        assert a1 == a2 and b1 == b2
        assert np.array_equal(c1, c2)

    def test_zero_noise_subset_recovery(self):
        spec = SyntheticSpec(n=60, m=5, informative_p=2, noise_sigma=0.0, seed=9)
        a, b, coeffs = generate_regression(spec)
        sol = solve_subset_selection(make_agg(b.values, a.values), p=2)
        assert sol.support == tuple(np.flatnonzero(coeffs))
        assert sol.objective <= 1e-9

    def test_coefficients_in_range(self):
        spec = SyntheticSpec(n=10, m=6, informative_p=6, coef_range=(2.0, 3.0), seed=1)
        _, _, coeffs = generate_regression(spec)
        assert np.all(coeffs >= 2.0) and np.all(coeffs <= 3.0)

    def test_pca_sample_deterministic_shape(self):
        spec = SyntheticSpec(n=12, m=4, informative_p=0, seed=3, kind="pca_sample")
        a1 = generate_pca_sample(spec)
        a2 = generate_pca_sample(spec)
        assert a1 == a2
        assert a1.shape == (12, 4)

    def test_generate_instance_dispatch(self):
        reg = SyntheticSpec(n=5, m=2, informative_p=1, seed=0)
        a, b, coeffs = generate_instance(reg)
        assert b is not None and coeffs is not None
        pca = SyntheticSpec(n=5, m=2, informative_p=0, seed=0, kind="pca_sample")
        a, b, coeffs = generate_instance(pca)
        assert b is None and coeffs is None

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SyntheticSpec(n=5, m=2, informative_p=3)
        with pytest.raises(ValueError):
            SyntheticSpec(n=5, m=2, informative_p=1, noise_sigma=-1.0)
        with pytest.raises(ValueError):
            SyntheticSpec(n=5, m=2, informative_p=1, kind="mystery")


class TestCsv:
    def test_small_round_trip(self, tmp_path):
        m = DataMatrix([[1.5, -2.25], [3.0, 4.125]])
        path = tmp_path / "m.csv"
        write_csv_matrix(m, path)
        assert read_csv_matrix(path) == m

    def test_large_round_trip_bit_exact(self, tmp_path, rng):
        m = DataMatrix(rng.standard_normal((1000, 20)))
        path = tmp_path / "big.csv"
        write_csv_matrix(m, path)
        assert read_csv_matrix(path) == m

    def test_header_round_trip(self, tmp_path):
        m = DataMatrix([[1.0, 2.0]])
        path = tmp_path / "h.csv"
        write_csv_matrix(m, path, header=["x", "y"])
        assert read_csv_matrix(path, header=True) == m

    def test_empty_file_is_error(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(CsvFormatError):
            read_csv_matrix(path)

    def test_ragged_rows_report_position(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(CsvFormatError, match="row 2"):
            read_csv_matrix(path)

    def test_non_numeric_reports_position(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3,oops\n")
        with pytest.raises(CsvFormatError, match="row 2, column 2"):
            read_csv_matrix(path)

    def test_extreme_values_round_trip(self, tmp_path):
        vals = [[1e-308, -1e308], [0.1 + 0.2, 1 / 3]]
        m = DataMatrix(vals)
        path = tmp_path / "x.csv"
        write_csv_matrix(m, path)
        assert read_csv_matrix(path) == m


class TestStandardize:
    def test_zero_mean_unit_std(self, rng):
        m = DataMatrix(rng.standard_normal((50, 3)) * 4 + 2)
        out = standardize_columns(m).values
        assert np.abs(out.mean(axis=0)).max() <= 1e-12
        assert np.abs(out.std(axis=0) - 1).max() <= 1e-12

    def test_constant_column_rejected(self):
        with pytest.raises(ValueError, match="column 1"):
            standardize_columns(DataMatrix([[1.0, 5.0], [2.0, 5.0]]))


class TestBundles:
    def test_regression_bundle_round_trip(self, tmp_path):
        spec = SyntheticSpec(n=15, m=3, informative_p=2, seed=77)
        manifest = write_instance_bundle(spec, tmp_path / "inst")
        loaded_spec, a, b = load_instance_bundle(manifest)
        assert loaded_spec == spec
        ref_a, ref_b, _ = generate_regression(spec)
        assert a == ref_a and b == ref_b

    def test_pca_bundle_round_trip(self, tmp_path):
        spec = SyntheticSpec(n=8, m=3, informative_p=0, seed=4, kind="pca_sample")
        manifest = write_instance_bundle(spec, tmp_path / "inst")
        loaded_spec, a, b = load_instance_bundle(manifest)
        assert b is None
        assert a == generate_pca_sample(spec)

    def test_load_by_directory(self, tmp_path):
        spec = SyntheticSpec(n=5, m=2, informative_p=1, seed=1)
        write_instance_bundle(spec, tmp_path / "inst")
        loaded_spec, _, _ = load_instance_bundle(tmp_path / "inst")
        assert loaded_spec == spec
