"""Point-to-center allocation under the L1 metric and the clustering cost."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset


@dataclass(frozen=True)
class CandidateSet:
    """One solution: a k x d matrix of cluster centers, k >= 2."""

    centers: np.ndarray

    def __post_init__(self):
        c = np.array(self.centers, dtype=float)
        if c.ndim != 2:
            raise ValueError("centers must be a 2-D (k x d) matrix")
        if c.shape[0] < 2:
            raise ValueError("a candidate needs at least 2 centers")
        if not np.isfinite(c).all():
            raise ValueError("centers contain non-finite coordinates")
        object.__setattr__(self, "centers", c)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]


@dataclass(frozen=True)
class Allocation:
    """Distance matrix, one-hot membership, labels, and per-cluster counts.

    ``dist[i, j]`` is the L1 distance of point i to center j; ``onehot`` has
    a single 1 per row marking the nearest center (ties to the lowest column
    index); ``counts[j]`` is the size of cluster j.
    """

    dist: np.ndarray
    onehot: np.ndarray
    labels: np.ndarray
    counts: np.ndarray

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def k(self) -> int:
        return self.dist.shape[1]


def allocation_distance(ds: Dataset, cs: CandidateSet) -> Allocation:
    """Compute L1 distances from every point to every center and allocate.

    Each point goes to its nearest center; exact distance ties break to the
    lowest center index so rows stay one-hot and clusters stay disjoint.
    """
    if cs.d != ds.d:
        raise ValueError(f"centers have {cs.d} columns but dataset has {ds.d}")
    z = ds.features
    dist = np.abs(z[:, None, :] - cs.centers[None, :, :]).sum(axis=2)
    labels = dist.argmin(axis=1)
    onehot = np.zeros_like(dist)
    onehot[np.arange(ds.n), labels] = 1.0
    counts = np.bincount(labels, minlength=cs.k)
    return Allocation(dist=dist, onehot=onehot, labels=labels, counts=counts)


def clustering_cost(alloc: Allocation, mean: bool = False) -> float:
    """Sum (or mean, with ``mean=True``) of each point's distance to its center."""
    assigned = np.take_along_axis(alloc.dist, alloc.labels[:, None], axis=1)
    total = float(assigned.sum())
    return total / alloc.n if mean else total
