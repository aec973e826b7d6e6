"""Dataset loading, outcome transforms, synthetic benchmarks, and 2-D PCA.

A :class:`Dataset` is a plain (features, outcome) pair. Features are meant to
be non-negative payment-like amounts but any finite reals are accepted; the
clustering side of the pipeline never looks at the outcome and the regression
side never looks at the features, so the two can be prepared independently.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TRANSFORM_MODES = ("log1p", "log", "identity")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """An n x d feature matrix plus a length-n outcome vector.

    Immutable after construction (the arrays are marked read-only), so a
    Dataset can be shared across concurrent candidate evaluations.
    """

    features: np.ndarray
    outcome: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        feats = np.array(self.features, dtype=float)
        out = np.array(self.outcome, dtype=float)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        n, d = feats.shape
        if n < 2:
            raise ValueError(f"need at least 2 rows, got {n}")
        if d < 1:
            raise ValueError("need at least 1 feature column")
        if not np.isfinite(feats).all():
            raise ValueError("features contain missing or non-finite entries")
        if out.shape != (n,):
            raise ValueError(
                f"outcome length {out.shape} does not match number of rows {n}"
            )
        if not np.isfinite(out).all():
            raise ValueError("outcome contains non-finite values")
        names = tuple(str(c) for c in self.feature_names)
        if len(names) != d:
            raise ValueError(f"expected {d} feature names, got {len(names)}")
        object.__setattr__(self, "features", _readonly(feats))
        object.__setattr__(self, "outcome", _readonly(out))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a blob benchmark: Gaussian clusters with cluster-level outcomes.

    Each cluster gets a true center drawn uniformly from ``center_box`` and
    ``points_per_cluster`` points at center + Gaussian noise of scale
    ``spread``. The outcome of a point is its cluster's entry in
    ``outcome_means`` plus Gaussian noise of scale ``outcome_noise``.
    ``spread`` and ``outcome_noise`` may be 0 for exact, noise-free data.
    """

    n_clusters: int
    points_per_cluster: int
    d: int
    outcome_means: tuple[float, ...]
    center_box: tuple[float, float] = (0.0, 60.0)
    spread: float = 1.0
    outcome_noise: float = 0.0
    clip_negative: bool = False

    def __post_init__(self):
        if self.n_clusters < 2:
            raise ValueError("n_clusters must be >= 2")
        if self.points_per_cluster < 2:
            raise ValueError("points_per_cluster must be >= 2")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if len(self.outcome_means) != self.n_clusters:
            raise ValueError("outcome_means must have one entry per cluster")
        lo, hi = self.center_box
        if not lo < hi:
            raise ValueError("center_box must be an increasing (low, high) pair")
        if self.spread < 0:
            raise ValueError("spread must be non-negative")
        if self.outcome_noise < 0:
            raise ValueError("outcome_noise must be non-negative")
        object.__setattr__(self, "outcome_means", tuple(float(m) for m in self.outcome_means))


def load_csv(path, outcome_column: str) -> Dataset:
    """Read a headered, comma-separated numeric file into a Dataset.

    All columns except ``outcome_column`` become features, in header order.
    Raises FileNotFoundError for a missing file and ValueError for a missing
    or duplicated outcome column, a non-numeric cell (named by 1-based data
    row and column), or fewer than 2 data rows.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise ValueError(f"{path}: empty file, expected a header row")
        if outcome_column not in header:
            raise ValueError(f"{path}: outcome column not found: '{outcome_column}'")
        if header.count(outcome_column) > 1:
            raise ValueError(f"{path}: duplicate outcome column '{outcome_column}'")
        y_idx = header.index(outcome_column)
        rows = []
        for r, cells in enumerate(reader, start=1):
            if len(cells) != len(header):
                raise ValueError(
                    f"{path}: row {r} has {len(cells)} cells, expected {len(header)}"
                )
            parsed = []
            for j, cell in enumerate(cells):
                try:
                    v = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric value {cell!r} at row {r}, column '{header[j]}'"
                    ) from None
                if not np.isfinite(v):
                    raise ValueError(
                        f"{path}: non-finite value {cell!r} at row {r}, column '{header[j]}'"
                    )
                parsed.append(v)
            rows.append(parsed)
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least 2 data rows, got {len(rows)}")
    if len(header) < 2:
        raise ValueError(f"{path}: no feature columns besides '{outcome_column}'")
    data = np.asarray(rows, dtype=float)
    feat_idx = [j for j in range(len(header)) if j != y_idx]
    names = tuple(header[j] for j in feat_idx)
    return Dataset(features=data[:, feat_idx], outcome=data[:, y_idx], feature_names=names)


def transform_outcome(ds: Dataset, mode: str = "log1p") -> Dataset:
    """Replace the outcome elementwise by ln(1+y), ln(y), or y itself.

    ``log`` requires strictly positive outcomes and ``log1p`` non-negative
    ones; a violation is reported with the offending index.
    """
    if mode not in TRANSFORM_MODES:
        raise ValueError(f"unknown transform mode '{mode}', expected one of {TRANSFORM_MODES}")
    if mode == "identity":
        return ds
    y = ds.outcome
    if mode == "log":
        bad = np.flatnonzero(y <= 0)
        if bad.size:
            raise ValueError(
                f"log transform undefined at index {bad[0]}: value {y[bad[0]]}"
            )
        out = np.log(y)
    else:
        bad = np.flatnonzero(y < 0)
        if bad.size:
            raise ValueError(
                f"log1p transform undefined at index {bad[0]}: value {y[bad[0]]}"
            )
        out = np.log1p(y)
    return Dataset(features=ds.features, outcome=out, feature_names=ds.feature_names)


def standardize_features(ds: Dataset) -> Dataset:
    """Per-column z-scoring of the features; constant columns are centered only."""
    x = ds.features
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd = np.where(sd == 0, 1.0, sd)
    return Dataset(features=(x - mu) / sd, outcome=ds.outcome, feature_names=ds.feature_names)


def gen_synthetic(spec: SyntheticSpec, seed: int) -> tuple[Dataset, np.ndarray]:
    """Draw a blob dataset from ``spec``; returns (dataset, true labels).

    Bit-reproducible for a given seed: the generator draws centers first,
    then point noise, then outcome noise, always in that order.
    """
    rng = np.random.default_rng(seed)
    lo, hi = spec.center_box
    centers = rng.uniform(lo, hi, size=(spec.n_clusters, spec.d))
    labels = np.repeat(np.arange(spec.n_clusters), spec.points_per_cluster)
    n = labels.size
    feats = centers[labels] + spec.spread * rng.standard_normal((n, spec.d))
    if spec.clip_negative:
        feats = np.maximum(feats, 0.0)
    means = np.asarray(spec.outcome_means)
    outcome = means[labels] + spec.outcome_noise * rng.standard_normal(n)
    names = tuple(f"x{j}" for j in range(spec.d))
    return Dataset(features=feats, outcome=outcome, feature_names=names), labels


def pca_project(ds: Dataset) -> np.ndarray:
    """Scores on the top-2 principal components of the (column-centered) features.

    Components are ordered by descending eigenvalue of the sample covariance
    matrix, and each component's sign is fixed so its largest-magnitude
    loading is positive, making the projection deterministic.
    """
    if ds.d < 2:
        raise ValueError("PCA projection needs at least 2 feature columns")
    if ds.n < 3:
        raise ValueError("PCA projection needs at least 3 rows")
    xc = ds.features - ds.features.mean(axis=0)
    cov = (xc.T @ xc) / (ds.n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    comps = eigvecs[:, ::-1][:, :2].copy()
    for c in range(2):
        peak = np.argmax(np.abs(comps[:, c]))
        if comps[peak, c] < 0:
            comps[:, c] = -comps[:, c]
    return xc @ comps


def save_dataset_csv(ds: Dataset, path, outcome_name: str = "outcome") -> None:
    """Write the dataset in the same CSV schema load_csv reads."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(ds.feature_names) + [outcome_name])
        for i in range(ds.n):
            w.writerow([repr(v) for v in ds.features[i]] + [repr(float(ds.outcome[i]))])


def save_labels_csv(labels, path, column: str = "label") -> None:
    """Write a single-column sidecar file of integer labels."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([column])
        for v in np.asarray(labels).ravel():
            w.writerow([int(v)])
