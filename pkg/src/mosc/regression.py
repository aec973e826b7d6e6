"""Cross-validated regression of the outcome on one-hot cluster membership.

The design matrix [1, I] is rank-deficient by construction (the indicator
columns sum to the intercept column), so the fit is the minimum-norm
least-squares solution. Coefficients are therefore not unique in any
meaningful sense, but fitted values are: a row in cluster r is always fitted
with the training mean of the outcome over cluster r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import Allocation


@dataclass(frozen=True)
class FoldAssignment:
    """A balanced partition of n rows into M cross-validation folds.

    Fixed for the lifetime of an optimization run: every candidate is scored
    against the same partition, which keeps regression errors comparable
    across the pool.
    """

    fold_of: np.ndarray
    M: int

    def __post_init__(self):
        fold_of = np.asarray(self.fold_of, dtype=int)
        if self.M < 2:
            raise ValueError("need at least 2 folds")
        if fold_of.ndim != 1:
            raise ValueError("fold_of must be a flat vector")
        if fold_of.min(initial=0) < 0 or fold_of.max(initial=0) >= self.M:
            raise ValueError(f"fold indices must lie in [0, {self.M})")
        sizes = np.bincount(fold_of, minlength=self.M)
        if (sizes == 0).any():
            raise ValueError("every fold must be non-empty")
        if sizes.max() - sizes.min() > 1:
            raise ValueError("folds must be balanced (sizes differing by at most 1)")
        object.__setattr__(self, "fold_of", fold_of)

    @property
    def n(self) -> int:
        return self.fold_of.size

    @property
    def fold_sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of, minlength=self.M)


def make_folds(n: int, M: int, seed: int) -> FoldAssignment:
    """Uniformly random balanced partition of n rows into M folds."""
    if M < 2 or M > n:
        raise ValueError(f"fold count must satisfy 2 <= M <= n, got M={M}, n={n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    fold_of = np.empty(n, dtype=int)
    fold_of[perm] = np.arange(n) % M
    return FoldAssignment(fold_of=fold_of, M=M)


@dataclass(frozen=True)
class RegressionFit:
    """Minimum-norm least-squares coefficients for the design [1, I].

    ``beta[0]`` is the intercept, ``beta[1:]`` the per-cluster offsets.
    ``empty_train_clusters`` lists indicator columns that were all-zero in
    the training rows; their coefficients are 0 in the minimum-norm solution,
    so such clusters predict at the bare intercept.
    """

    beta: np.ndarray
    design_rank: int
    empty_train_clusters: tuple[int, ...] = ()


def fit_ls(I_train: np.ndarray, Y_train: np.ndarray) -> RegressionFit:
    """Fit outcome ~ [1, I] by minimum-norm least squares.

    Rank deficiency is expected, not an error: the fit is computed via SVD
    and fitted values are unique even though the coefficient vector is only
    pinned down by the minimum-norm tie-break.
    """
    I_train = np.asarray(I_train, dtype=float)
    Y_train = np.asarray(Y_train, dtype=float)
    if I_train.ndim != 2:
        raise ValueError("membership matrix must be 2-D")
    if Y_train.shape != (I_train.shape[0],):
        raise ValueError("outcome length must match membership rows")
    design = np.hstack([np.ones((I_train.shape[0], 1)), I_train])
    beta, _, rank, _ = np.linalg.lstsq(design, Y_train, rcond=None)
    empty = tuple(int(j) for j in np.flatnonzero(I_train.sum(axis=0) == 0))
    return RegressionFit(beta=beta, design_rank=int(rank), empty_train_clusters=empty)


def predict(fit: RegressionFit, I_test: np.ndarray) -> np.ndarray:
    """Predicted outcomes [1, I_test] @ beta."""
    I_test = np.asarray(I_test, dtype=float)
    if I_test.ndim != 2 or I_test.shape[1] != fit.beta.size - 1:
        raise ValueError(
            f"membership matrix has {I_test.shape[1] if I_test.ndim == 2 else '?'} columns, "
            f"fit expects {fit.beta.size - 1}"
        )
    return fit.beta[0] + I_test @ fit.beta[1:]


def cv_rmse(alloc: Allocation, Y: np.ndarray, folds: FoldAssignment) -> float:
    """Mean over folds of the held-out root-mean-square prediction error.

    For each fold, the regression is fitted on all other rows and evaluated
    on the fold's rows; the M fold RMSEs are averaged.
    """
    Y = np.asarray(Y, dtype=float)
    if not (alloc.n == Y.size == folds.n):
        raise ValueError(
            f"size mismatch: allocation n={alloc.n}, outcome n={Y.size}, folds n={folds.n}"
        )
    onehot = alloc.onehot
    total = 0.0
    for m in range(folds.M):
        test = folds.fold_of == m
        train = ~test
        fit = fit_ls(onehot[train], Y[train])
        pred = predict(fit, onehot[test])
        total += float(np.sqrt(np.mean((Y[test] - pred) ** 2)))
    return total / folds.M
