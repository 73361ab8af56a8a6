"""Synthetic instance generation and CSV/JSON (de)serialization.

Generation is fully determined by the SyntheticSpec fields: one PCG64
stream per instance, with a documented draw order, so instances are
reproducible across runs and machines.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .linalg import DataMatrix

__all__ = [
    "SyntheticSpec",
    "CsvFormatError",
    "generate_regression",
    "generate_pca_sample",
    "generate_instance",
    "read_csv_matrix",
    "write_csv_matrix",
    "standardize_columns",
    "write_instance_bundle",
    "load_instance_bundle",
]


class CsvFormatError(ValueError):
    """Malformed CSV input, with the offending position in the message."""


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    m: int
    informative_p: int
    noise_sigma: float = 1.0
    coef_range: tuple[float, float] = (0.0, 100.0)
    seed: int = 0
    kind: str = "regression"

    def __post_init__(self):
        if self.kind not in ("regression", "pca_sample"):
            raise ValueError(f"unknown instance kind {self.kind!r}")
        if not 0 <= self.informative_p <= self.m:
            raise ValueError("informative_p must be in [0, m]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["coef_range"] = list(self.coef_range)
        return d

    @staticmethod
    def from_dict(d: dict) -> "SyntheticSpec":
        d = dict(d)
        d["coef_range"] = tuple(d.get("coef_range", (0.0, 100.0)))
        return SyntheticSpec(**d)


def generate_regression(spec: SyntheticSpec) -> tuple[DataMatrix, DataMatrix, np.ndarray]:
    """Gaussian features, sparse uniform coefficients, Gaussian noise.

    Draw order on the PCG64 stream seeded with ``spec.seed``: the feature
    matrix (row-major), the support positions, the coefficient values, then
    the noise vector.
    """
    if spec.kind != "regression":
        raise ValueError("spec.kind must be 'regression'")
    rng = np.random.default_rng(spec.seed)
    a = rng.standard_normal((spec.n, spec.m))
    coeffs = np.zeros(spec.m)
    support = rng.choice(spec.m, size=spec.informative_p, replace=False)
    low, high = spec.coef_range
    coeffs[np.sort(support)] = rng.uniform(low, high, size=spec.informative_p)
    noise = rng.standard_normal(spec.n)
    b = a @ coeffs + spec.noise_sigma * noise
    return DataMatrix(a), DataMatrix(b.reshape(-1, 1)), coeffs


def generate_pca_sample(spec: SyntheticSpec) -> DataMatrix:
    """Single-factor rows with isotropic noise.

    Measured data tends to carry a dominant direction, so rows are drawn as
    score * loading + noise_sigma * Gaussian. Draw order: scores, loading,
    noise matrix.
    """
    if spec.kind != "pca_sample":
        raise ValueError("spec.kind must be 'pca_sample'")
    rng = np.random.default_rng(spec.seed)
    scores = rng.standard_normal(spec.n)
    loading = rng.standard_normal(spec.m)
    noise = rng.standard_normal((spec.n, spec.m))
    a = np.outer(scores, loading) + spec.noise_sigma * noise
    return DataMatrix(a)


def generate_instance(spec: SyntheticSpec):
    """Dispatch on ``spec.kind``; returns (A, B, coeffs) or (A, None, None)."""
    if spec.kind == "regression":
        return generate_regression(spec)
    a = generate_pca_sample(spec)
    return a, None, None


def write_csv_matrix(m: DataMatrix, path: str | Path, header: list[str] | None = None) -> None:
    """Comma-separated, LF endings, 17 significant digits (round-trip exact)."""
    path = Path(path)
    with path.open("w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            if len(header) != m.cols:
                raise CsvFormatError(
                    f"header has {len(header)} fields for {m.cols} columns"
                )
            writer.writerow(header)
        for row in m.values:
            writer.writerow([f"{x:.17g}" for x in row])


def read_csv_matrix(path: str | Path, header: bool = False) -> DataMatrix:
    """Parse a rectangular numeric CSV; errors carry row/column positions."""
    path = Path(path)
    rows: list[list[float]] = []
    width: int | None = None
    with path.open("r", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, record in enumerate(reader, start=1):
            if header and lineno == 1:
                width = len(record)
                continue
            if not record:
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise CsvFormatError(
                    f"row {lineno} has {len(record)} fields, expected {width}"
                )
            parsed = []
            for col, cell in enumerate(record, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise CsvFormatError(
                        f"row {lineno}, column {col}: {cell!r} is not numeric"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise CsvFormatError(f"{path} contains no data rows")
    return DataMatrix(rows)


def standardize_columns(m: DataMatrix) -> DataMatrix:
    """Center each column and scale it to unit standard deviation."""
    vals = m.values
    mean = vals.mean(axis=0)
    std = vals.std(axis=0)
    for j, s in enumerate(std):
        if s == 0.0:
            raise ValueError(f"column {j} has zero variance and cannot be standardized")
    return DataMatrix((vals - mean) / std)


def write_instance_bundle(spec: SyntheticSpec, out_dir: str | Path) -> Path:
    """Generate an instance and lay it out as CSV payloads plus a manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    a, b, coeffs = generate_instance(spec)
    files = {"A": "A.csv"}
    write_csv_matrix(a, out_dir / "A.csv")
    if b is not None:
        write_csv_matrix(b, out_dir / "B.csv")
        files["B"] = "B.csv"
    if coeffs is not None:
        write_csv_matrix(DataMatrix(coeffs.reshape(-1, 1)), out_dir / "true_coeffs.csv")
        files["true_coeffs"] = "true_coeffs.csv"
    manifest = {"spec": spec.to_dict(), "files": files, "seed": spec.seed}
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def load_instance_bundle(path: str | Path):
    """Read a manifest (or its directory) back into matrices.

    Returns (spec, A, B) where B is None for PCA-style instances.
    """
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    manifest = json.loads(path.read_text())
    spec = SyntheticSpec.from_dict(manifest["spec"])
    base = path.parent
    a = read_csv_matrix(base / manifest["files"]["A"])
    b = None
    if "B" in manifest["files"]:
        b = read_csv_matrix(base / manifest["files"]["B"])
    return spec, a, b
