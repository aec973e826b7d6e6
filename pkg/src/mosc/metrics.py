"""Solution quality metrics and the three-model comparison harness."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import Dataset
from .assignment import CandidateSet, allocation_distance
from .evolve import OBJECTIVE_MODES, RunConfig, RunReport, run

DISTANCE_METRICS = ("L1", "L2")


def pairwise_distances(x: np.ndarray, metric: str = "L1", block: int = 512) -> np.ndarray:
    """Dense n x n distance matrix, computed in row blocks to bound memory."""
    if metric not in DISTANCE_METRICS:
        raise ValueError(f"metric must be one of {DISTANCE_METRICS}")
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    out = np.empty((n, n))
    for start in range(0, n, block):
        stop = min(start + block, n)
        diff = x[start:stop, None, :] - x[None, :, :]
        if metric == "L1":
            out[start:stop] = np.abs(diff).sum(axis=2)
        else:
            out[start:stop] = np.sqrt((diff**2).sum(axis=2))
    return out


def silhouette_from_distances(dists: np.ndarray, labels: np.ndarray) -> float:
    """Average silhouette width given a precomputed distance matrix.

    a(i) is the mean distance to the rest of i's own cluster, b(i) the
    smallest mean distance to any other cluster, and s(i) = (b-a)/max(a,b).
    Points alone in their cluster score 0.
    """
    labels = np.asarray(labels)
    n = labels.size
    if dists.shape != (n, n):
        raise ValueError("distance matrix shape does not match labels")
    uniq, idx = np.unique(labels, return_inverse=True)
    k = uniq.size
    if k < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    onehot = np.zeros((n, k))
    onehot[np.arange(n), idx] = 1.0
    sums = dists @ onehot
    counts = onehot.sum(axis=0)
    own = counts[idx]
    scores = np.zeros(n)
    multi = own > 1
    a = np.where(multi, sums[np.arange(n), idx] / np.maximum(own - 1, 1), 0.0)
    mean_other = sums / counts
    mean_other[np.arange(n), idx] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    valid = multi & (denom > 0)
    scores[valid] = ((b - a) / denom)[valid]
    return float(scores.mean())


def silhouette(ds: Dataset, labels, metric: str = "L1") -> float:
    """Average silhouette width of a labeling of the dataset's points."""
    labels = np.asarray(labels)
    if ds.n < 3:
        raise ValueError("silhouette needs at least 3 points")
    if labels.shape != (ds.n,):
        raise ValueError("labels length must equal the number of points")
    return silhouette_from_distances(pairwise_distances(ds.features, metric), labels)


@dataclass(frozen=True)
class ModelMetrics:
    """Selected-solution and final-pool quality numbers for one objective mode."""

    asw_optimal: float
    cv_optimal: float
    asw_pool_mean: float
    asw_pool_sd: float
    cv_pool_mean: float
    cv_pool_sd: float
    n_pool_degenerate: int


@dataclass
class ComparisonTable:
    """Side-by-side metrics for the multi-objective run and both
    single-objective baselines, all sharing one seed and fold partition."""

    models: dict[str, ModelMetrics]
    provenance: dict
    reports: dict[str, RunReport] = field(default_factory=dict, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "schema": "mosc-comparison-v1",
            "models": {
                name: {
                    "asw_optimal": m.asw_optimal,
                    "cv_optimal": m.cv_optimal,
                    "asw_pool_mean": m.asw_pool_mean,
                    "asw_pool_sd": m.asw_pool_sd,
                    "cv_pool_mean": m.cv_pool_mean,
                    "cv_pool_sd": m.cv_pool_sd,
                    "n_pool_degenerate": m.n_pool_degenerate,
                }
                for name, m in self.models.items()
            },
            "provenance": self.provenance,
        }

    def to_csv_rows(self) -> list[list]:
        header = ["row"]
        for mode in OBJECTIVE_MODES:
            header += [f"{mode}_asw", f"{mode}_cv"]
        rows = [header]
        for row_name, asw_key, cv_key in (
            ("optimal", "asw_optimal", "cv_optimal"),
            ("pool_mean", "asw_pool_mean", "cv_pool_mean"),
            ("pool_sd", "asw_pool_sd", "cv_pool_sd"),
        ):
            row = [row_name]
            for mode in OBJECTIVE_MODES:
                m = self.models[mode]
                row += [repr(getattr(m, asw_key)), repr(getattr(m, cv_key))]
            rows.append(row)
        return rows


def compare(ds: Dataset, cfg: RunConfig, metric: str = "L1", threads: int = 1) -> ComparisonTable:
    """Run the optimizer in multi, f_only, and g_only modes on the same seed.

    All three runs share the initial pool and the fold partition (both are
    pure functions of the seed), so their CV columns are directly
    comparable. Pool rows whose final allocation leaves fewer than 2
    non-empty clusters have no silhouette and are excluded from the pool
    averages; their count is reported per model.
    """
    dists = pairwise_distances(ds.features, metric)
    models: dict[str, ModelMetrics] = {}
    reports: dict[str, RunReport] = {}
    fingerprints: dict[str, str] = {}
    for mode in OBJECTIVE_MODES:
        rep = run(ds, replace(cfg, objective_mode=mode), threads=threads)
        reports[mode] = rep
        fingerprints[mode] = rep.init_pool_sha256
        asw_opt = silhouette_from_distances(dists, rep.selected_alloc.labels)
        cv_opt = float(rep.history[-1, rep.selected_index, 1])
        pool_asw = np.full(cfg.n_pool, np.nan)
        for i, c in enumerate(rep.final_centers):
            alloc = allocation_distance(ds, CandidateSet(c))
            if np.count_nonzero(alloc.counts) >= 2:
                pool_asw[i] = silhouette_from_distances(dists, alloc.labels)
        pool_cv = rep.history[-1, :, 1]
        models[mode] = ModelMetrics(
            asw_optimal=asw_opt,
            cv_optimal=cv_opt,
            asw_pool_mean=float(np.nanmean(pool_asw)),
            asw_pool_sd=float(np.nanstd(pool_asw, ddof=1)),
            cv_pool_mean=float(np.mean(pool_cv)),
            cv_pool_sd=float(np.std(pool_cv, ddof=1)),
            n_pool_degenerate=int(np.isnan(pool_asw).sum()),
        )
    provenance = {
        "seed": cfg.seed,
        "M": cfg.M,
        "silhouette_metric": metric,
        "init_pool_sha256": fingerprints,
    }
    return ComparisonTable(models=models, provenance=provenance, reports=reports)
