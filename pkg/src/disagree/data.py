"""Tabular dataset ingestion, splitting, and standardization.

Datasets are plain numeric CSV files (UTF-8, comma separated, one header
row) paired with a JSON schema that lists the feature columns in order
plus the label column. Labels are binary {0, 1}. Values are assumed to be
numerically encoded already; no categorical machinery lives here.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = [
    "FeatureSchema",
    "Dataset",
    "Standardizer",
    "load_schema",
    "save_schema",
    "load_csv",
    "save_csv",
    "train_test_split",
    "fit_standardizer",
    "standardize",
    "unstandardize",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature names plus the label column name."""

    names: tuple[str, ...]
    label_name: str

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if not self.names:
            raise DataError("schema needs at least one feature")
        if any(not n for n in self.names):
            raise DataError("feature names must be non-empty")
        if len(set(self.names)) != len(self.names):
            raise DataError("feature names must be unique")
        if self.label_name in self.names:
            raise DataError(f"label column {self.label_name!r} clashes with a feature name")

    @property
    def d(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class Dataset:
    """Feature matrix X (n x d), binary labels y (n,), and the schema."""

    schema: FeatureSchema
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y)
        if X.ndim != 2 or X.shape[1] != self.schema.d:
            raise DataError(f"X must be n x {self.schema.d}, got shape {X.shape}")
        if X.shape[0] < 1:
            raise DataError("dataset needs at least one row")
        if not np.isfinite(X).all():
            raise DataError("X contains non-finite values")
        if y.shape != (X.shape[0],):
            raise DataError(f"y must have shape ({X.shape[0]},), got {y.shape}")
        if not np.isin(y, (0, 1)).all():
            raise DataError("labels must be 0 or 1")
        object.__setattr__(self, "X", _frozen(X))
        yi = y.astype(int)
        yi.setflags(write=False)
        object.__setattr__(self, "y", yi)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.schema.d

    def take(self, indices: np.ndarray) -> "Dataset":
        """Row subset in the given order."""
        return Dataset(self.schema, self.X[indices], self.y[indices])

    def with_X(self, X: np.ndarray) -> "Dataset":
        """Same rows and labels with a transformed feature matrix."""
        return Dataset(self.schema, X, self.y)


@dataclass(frozen=True)
class Standardizer:
    """Per-column shift/scale fitted on training data.

    Stored stds are population standard deviations with zero entries
    replaced by 1, so constant columns map to exactly zero instead of
    dividing by zero.
    """

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = _frozen(np.atleast_1d(self.means))
        stds = _frozen(np.atleast_1d(self.stds))
        if means.shape != stds.shape or means.ndim != 1:
            raise DataError("means and stds must be 1-d and the same length")
        if (stds <= 0).any():
            raise DataError("stds must be positive after the constant-column guard")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    @property
    def d(self) -> int:
        return self.means.shape[0]


def load_schema(path: str | Path) -> FeatureSchema:
    """Read a schema JSON: {"features": [...], "label": "name"}."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"schema file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"schema file {path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or "features" not in doc or "label" not in doc:
        raise DataError(f"schema file {path} must contain 'features' and 'label'")
    return FeatureSchema(names=tuple(doc["features"]), label_name=str(doc["label"]))


def save_schema(schema: FeatureSchema, path: str | Path) -> None:
    doc = {"features": list(schema.names), "label": schema.label_name}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_csv(path: str | Path, schema: FeatureSchema) -> Dataset:
    """Parse a CSV whose header matches the schema features plus label.

    Column order in the file must be: feature columns in schema order,
    then the label column. Every cell must parse as a decimal real;
    labels must be exactly 0 or 1.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    expected = list(schema.names) + [schema.label_name]
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        if header != expected:
            raise DataError(
                f"{path}: header mismatch: expected {expected}, found {header}"
            )
        rows, labels = [], []
        for i, row in enumerate(reader):
            if len(row) != len(expected):
                raise DataError(f"{path}: row {i} has {len(row)} cells, expected {len(expected)}")
            vals = []
            for j, cell in enumerate(row[:-1]):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {cell!r} at row {i}, column {schema.names[j]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: non-finite value at row {i}, column {schema.names[j]!r}"
                    )
                vals.append(v)
            try:
                lab = float(row[-1])
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric label {row[-1]!r} at row {i}"
                ) from None
            if lab not in (0.0, 1.0):
                raise DataError(f"{path}: label {row[-1]!r} at row {i} is not 0 or 1")
            rows.append(vals)
            labels.append(int(lab))
    if not rows:
        raise DataError(f"{path} has a header but no data rows")
    return Dataset(schema, np.array(rows, dtype=float), np.array(labels, dtype=int))


def save_csv(ds: Dataset, path: str | Path) -> None:
    """Write a dataset in the format load_csv reads back."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.schema.names) + [ds.schema.label_name])
        for i in range(ds.n):
            writer.writerow([repr(float(v)) for v in ds.X[i]] + [int(ds.y[i])])


def train_test_split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled split.

    The train split gets floor(n * (1 - test_fraction)) rows of the seeded
    permutation and the test split the remainder, so e.g. n=4937 at 0.3
    yields a test split of 1482 rows.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if ds.n < 2:
        raise DataError("need at least 2 rows to split")
    n_train = int(math.floor(ds.n * (1.0 - test_fraction)))
    if n_train == 0 or n_train == ds.n:
        raise DataError(f"split of n={ds.n} at fraction {test_fraction} leaves an empty side")
    perm = np.random.default_rng(seed).permutation(ds.n)
    return ds.take(perm[:n_train]), ds.take(perm[n_train:])


def fit_standardizer(ds: Dataset) -> Standardizer:
    """Per-column mean and population std, with the zero-std guard."""
    means = ds.X.mean(axis=0)
    stds = ds.X.std(axis=0)  # population convention (ddof=0)
    stds = np.where(stds == 0.0, 1.0, stds)
    return Standardizer(means=means, stds=stds)


def _check_dim(s: Standardizer, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    cols = X.shape[-1] if X.ndim else 0
    if X.ndim not in (1, 2) or cols != s.d:
        raise DataError(f"expected {s.d} columns, got array of shape {X.shape}")
    return X


def standardize(s: Standardizer, X: np.ndarray) -> np.ndarray:
    X = _check_dim(s, X)
    return (X - s.means) / s.stds


def unstandardize(s: Standardizer, X: np.ndarray) -> np.ndarray:
    X = _check_dim(s, X)
    return X * s.stds + s.means
