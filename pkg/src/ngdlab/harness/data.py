"""Dataset ingestion, standardization and synthetic problems."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..model import one_hot

SYNTHETIC_KINDS = ("linreg_gaussian", "blobs_classification")


@dataclass
class Dataset:
    X: np.ndarray  # d_in x n
    Y: np.ndarray  # d_out x n (one-hot columns for classification)
    task: str
    feature_names: list[str] = field(default_factory=list)
    class_names: list[str] = field(default_factory=list)
    dropped_count: int = 0
    target_mean: np.ndarray | None = None
    target_std: np.ndarray | None = None

    def __post_init__(self):
        if self.task not in ("regression", "classification"):
            raise DataError(f"unknown task {self.task!r}")
        if self.X.shape[1] < 1 or self.X.shape[1] != self.Y.shape[1]:
            raise DataError(f"X has {self.X.shape[1]} samples, Y has {self.Y.shape[1]}")

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def head(self) -> str:
        return "gaussian" if self.task == "regression" else "categorical"

    def inverse_targets(self, Y):
        """Undo target standardization (regression only)."""
        if self.target_mean is None:
            return Y
        return Y * self.target_std + self.target_mean


def _parse(value: str):
    try:
        v = float(value)
    except ValueError:
        return None
    return v if np.isfinite(v) else None


def load_csv_dataset(path, target_column: str, task: str) -> Dataset:
    """Read a header-row CSV.

    Columns whose values are mostly non-numeric are skipped as features.
    Rows with an unparseable value in a kept column are dropped and counted.
    Classification labels map to indices in lexicographic order.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such dataset file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        rows = [row for row in reader if row and any(c.strip() for c in row)]
    if target_column not in header:
        raise KeyError(f"target column {target_column!r} not in header {header}")
    t_idx = header.index(target_column)

    feature_idx = []
    for j, name in enumerate(header):
        if j == t_idx:
            continue
        values = [row[j].strip() for row in rows if j < len(row) and row[j].strip()]
        numeric = sum(_parse(v) is not None for v in values)
        if values and numeric >= 0.5 * len(values):
            feature_idx.append(j)

    feats, targets, dropped = [], [], 0
    for row in rows:
        if len(row) != len(header):
            dropped += 1
            continue
        x = [_parse(row[j].strip()) for j in feature_idx]
        y = row[t_idx].strip()
        if any(v is None for v in x) or not y or (task == "regression" and _parse(y) is None):
            dropped += 1
            continue
        feats.append(x)
        targets.append(y)
    if not feats:
        raise DataError(f"no usable rows in {path} ({dropped} dropped)")

    X = np.array(feats, dtype=np.float64).T.reshape(len(feature_idx), len(feats))
    names = [header[j] for j in feature_idx]
    if task == "regression":
        Y = np.array([float(y) for y in targets])[None, :]
        return Dataset(X, Y, task, names, dropped_count=dropped)
    classes = sorted(set(targets))
    lookup = {c: k for k, c in enumerate(classes)}
    Y = one_hot([lookup[y] for y in targets], len(classes))
    return Dataset(X, Y, task, names, classes, dropped_count=dropped)


def standardize(ds: Dataset) -> Dataset:
    """Z-score features (population std, zero-variance -> 0) and regression targets."""
    if ds.n < 2:
        raise DataError("standardize needs at least two samples")

    def z(A):
        mu = A.mean(axis=1, keepdims=True)
        sd = A.std(axis=1, keepdims=True)
        safe = np.where(sd > 0, sd, 1.0)
        return np.where(sd > 0, (A - mu) / safe, 0.0), mu, safe

    X, _, _ = z(ds.X)
    if ds.task == "regression":
        Y, mu, sd = z(ds.Y)
        return replace(ds, X=X, Y=Y, target_mean=mu, target_std=sd)
    return replace(ds, X=X)


def make_synthetic(
    kind: str,
    n: int,
    d: int,
    seed: int = 0,
    noise: float = 0.1,
    classes: int = 3,
    separation: float = 10.0,
) -> Dataset:
    """Seeded toy problems.

    ``linreg_gaussian``: ``y = w^T x + noise * eps`` with ``x, eps ~ N(0, 1)``
    and ``w ~ N(0, I/d)`` so the signal has roughly unit variance.
    ``blobs_classification``: unit-variance clusters whose means sit at
    ``+-separation`` along distinct axes.
    """
    rng = np.random.default_rng(seed)
    names = [f"x{j}" for j in range(d)]
    if kind == "linreg_gaussian":
        w = rng.standard_normal(d) / np.sqrt(d)
        X = rng.standard_normal((d, n))
        Y = (w @ X + noise * rng.standard_normal(n))[None, :]
        return Dataset(X, Y, "regression", names)
    if kind == "blobs_classification":
        means = np.zeros((classes, d))
        for k in range(classes):
            means[k, (k // 2) % d] = separation if k % 2 == 0 else -separation
        labels = rng.integers(0, classes, size=n)
        X = means[labels].T + rng.standard_normal((d, n))
        return Dataset(X, one_hot(labels, classes), "classification", names, [f"c{k}" for k in range(classes)])
    raise ValueError(f"unknown synthetic kind {kind!r}; choose from {SYNTHETIC_KINDS}")


def least_squares_optimum(ds: Dataset) -> tuple[np.ndarray, float]:
    """Affine least-squares fit ``W`` ((d+1) x d_out) and its mean loss ``0.5 * mean ||r||^2``."""
    Xa = np.vstack([ds.X, np.ones((1, ds.n))])
    W, *_ = np.linalg.lstsq(Xa.T, ds.Y.T, rcond=None)
    r = W.T @ Xa - ds.Y
    return W, float(0.5 * np.sum(r * r) / ds.n)
