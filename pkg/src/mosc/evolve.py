"""Evolutionary bi-objective optimizer over pools of cluster-center sets.

Each pool member is a candidate set of centers with its own cluster count k.
Every iteration scores all members on (clustering cost, CV regression error),
freezes the non-dominated ones, and nudges every dominated member by one
single-sample gradient step per cluster. After the last iteration the final
Pareto front is normalized and the member most similar (cosine) to the
per-objective ideal corner is returned.

Randomness is split into independent streams keyed by (seed, stream, member)
so concurrent evaluation cannot change results: the fold partition, each
member's initial centers, and each member's gradient sampling all draw from
their own generator.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .dataset import Dataset
from .assignment import Allocation, CandidateSet, allocation_distance, clustering_cost
from .regression import FoldAssignment, cv_rmse, make_folds

DOMINANCE_MODES = ("paper_strict", "standard")
OBJECTIVE_MODES = ("multi", "f_only", "g_only")

_STREAM_INIT = 1
_STREAM_SGD = 2


@dataclass(frozen=True)
class RunConfig:
    """Optimizer settings. Defaults follow the reference parameterization
    (pool of 100, k from 2 to 11, 500 iterations, alpha=3/4, c_alpha=1,
    c_gamma=2000, 10 folds)."""

    n_pool: int = 100
    K: int = 11
    tau_max: int = 500
    alpha: float = 0.75
    c_alpha: float = 1.0
    c_gamma: float = 2000.0
    M: int = 10
    seed: int = 0
    dominance_mode: str = "paper_strict"
    objective_mode: str = "multi"
    reseed_empty: bool = False

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if self.n_pool < self.K - 1:
            raise ValueError(
                f"n_pool={self.n_pool} is too small for one candidate per k in 2..{self.K}"
            )
        if self.tau_max < 1:
            raise ValueError("tau_max must be >= 1")
        if not 0.5 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0.5, 1]")
        if self.c_alpha <= 0 or self.c_gamma <= 0:
            raise ValueError("c_alpha and c_gamma must be positive")
        if self.M < 2:
            raise ValueError("M must be >= 2")
        if self.dominance_mode not in DOMINANCE_MODES:
            raise ValueError(f"dominance_mode must be one of {DOMINANCE_MODES}")
        if self.objective_mode not in OBJECTIVE_MODES:
            raise ValueError(f"objective_mode must be one of {OBJECTIVE_MODES}")


@dataclass(frozen=True)
class ParetoArchive:
    """Non-dominated member indices plus the full pool's objective values."""

    member_indices: tuple[int, ...]
    objective_values: np.ndarray

    @property
    def n_p(self) -> int:
        return len(self.member_indices)


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of ideal-point cosine selection over the final front."""

    norm_values: np.ndarray
    ideal: np.ndarray
    similarities: np.ndarray
    chosen: int


@dataclass
class RunReport:
    """Full optimization trace plus the selected solution.

    ``history[t, i]`` is the (f, g) pair of member i as evaluated at
    iteration t (0-based); ``front_history[t]`` lists that iteration's
    non-dominated member indices. ``wall_time_s`` and ``final_centers`` are
    in-memory extras and deliberately excluded from the JSON document so the
    serialized report depends only on config and seed.
    """

    config: RunConfig
    n: int
    d: int
    pool_k: tuple[int, ...]
    history: np.ndarray
    front_history: list[list[int]]
    front_indices: list[int]
    selection: SelectionResult
    selected_index: int
    selected: CandidateSet
    selected_alloc: Allocation
    k_frequency: dict[int, int]
    init_pool_sha256: str
    flags: dict
    wall_time_s: float
    final_centers: list[np.ndarray] = field(repr=False, default_factory=list)

    def to_json_dict(self) -> dict:
        sel_f, sel_g = self.history[-1, self.selected_index]
        return {
            "schema": "mosc-report-v1",
            "config": asdict(self.config),
            "n": self.n,
            "d": self.d,
            "pool_k": list(self.pool_k),
            "history_f": self.history[:, :, 0].tolist(),
            "history_g": self.history[:, :, 1].tolist(),
            "front_history": [list(fr) for fr in self.front_history],
            "selection": {
                "front_indices": list(self.front_indices),
                "front_values": self.history[-1, self.front_indices].tolist(),
                "norm_values": self.selection.norm_values.tolist(),
                "ideal": self.selection.ideal.tolist(),
                "similarities": self.selection.similarities.tolist(),
                "chosen_front_pos": int(self.selection.chosen),
                "chosen_pool_index": int(self.selected_index),
            },
            "selected": {
                "pool_index": int(self.selected_index),
                "k": int(self.selected.k),
                "f": float(sel_f),
                "g": float(sel_g),
                "centers": self.selected.centers.tolist(),
                "labels": self.selected_alloc.labels.tolist(),
                "cluster_sizes": self.selected_alloc.counts.tolist(),
            },
            "k_frequency": {str(k): int(v) for k, v in sorted(self.k_frequency.items())},
            "init_pool_sha256": self.init_pool_sha256,
            "flags": self.flags,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))


def init_pool(ds: Dataset, cfg: RunConfig) -> list[CandidateSet]:
    """Seed the pool: member i gets k = 2 + (i mod (K-1)) centers drawn as
    distinct dataset rows. Round-robin k keeps every cluster count between
    2 and K represented evenly."""
    if ds.n < cfg.K:
        raise ValueError(f"dataset has {ds.n} rows, cannot sample {cfg.K} distinct centers")
    pool = []
    for i in range(cfg.n_pool):
        k = 2 + (i % (cfg.K - 1))
        rng = np.random.default_rng([cfg.seed, _STREAM_INIT, i])
        rows = rng.choice(ds.n, size=k, replace=False)
        pool.append(CandidateSet(centers=ds.features[rows]))
    return pool


def learning_rate(cfg: RunConfig, n_r: int) -> float:
    """Step size c_gamma / (1 + c_alpha * n_r)^alpha; decays with cluster size."""
    if n_r < 0:
        raise ValueError("cluster size must be non-negative")
    return cfg.c_gamma / (1.0 + cfg.c_alpha * n_r) ** cfg.alpha


def sgd_update(center: np.ndarray, z: np.ndarray, a: float) -> np.ndarray:
    """Move ``center`` toward ``z`` by an L1-unit step scaled to length ``a``.

    When z coincides with the center the step direction is undefined and the
    center is returned unchanged.
    """
    if a <= 0:
        raise ValueError("learning rate must be positive")
    center = np.asarray(center, dtype=float)
    diff = center - z
    norm = float(np.abs(diff).sum())
    if norm == 0.0:
        return center.copy()
    return center - a * diff / norm


def pareto_front(values, mode: str = "paper_strict") -> list[int]:
    """Indices of non-dominated objective pairs, in ascending index order.

    ``paper_strict`` treats r as dominated only when some t is strictly
    better in BOTH objectives; ``standard`` uses weak dominance (<= in both,
    < in at least one). Members with non-finite objectives are excluded from
    the front and cannot dominate anyone.
    """
    if mode not in DOMINANCE_MODES:
        raise ValueError(f"mode must be one of {DOMINANCE_MODES}")
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
        raise ValueError("values must be a non-empty list of (f, g) pairs")
    finite = np.isfinite(arr).all(axis=1)
    if not finite.any():
        raise ValueError("no candidate has finite objective values")
    f, g = arr[:, 0], arr[:, 1]
    lt_f = f[:, None] < f[None, :]
    lt_g = g[:, None] < g[None, :]
    if mode == "paper_strict":
        dominates = lt_f & lt_g
    else:
        le_f = f[:, None] <= f[None, :]
        le_g = g[:, None] <= g[None, :]
        dominates = le_f & le_g & (lt_f | lt_g)
    dominates[~finite, :] = False
    dominated = dominates.any(axis=0)
    return [int(i) for i in np.flatnonzero(finite & ~dominated)]


def select_final(front_values) -> SelectionResult:
    """Pick the front member most similar to the per-objective ideal corner.

    Objective columns are z-scored over the front (sample sd; an all-equal
    column normalizes to zeros), the ideal is the per-column minimum of the
    normalized values, and similarity is the cosine between each normalized
    row and the ideal (0 whenever either vector has zero norm). Ties go to
    the lowest index.
    """
    vals = np.asarray(front_values, dtype=float)
    if vals.ndim != 2 or vals.shape[1] != 2 or vals.shape[0] == 0:
        raise ValueError("front must be a non-empty list of (f, g) pairs")
    n_p = vals.shape[0]
    if n_p == 1:
        return SelectionResult(
            norm_values=np.zeros((1, 2)),
            ideal=np.zeros(2),
            similarities=np.zeros(1),
            chosen=0,
        )
    mean = vals.mean(axis=0)
    sd = vals.std(axis=0, ddof=1)
    norm = np.where(sd > 0, (vals - mean) / np.where(sd == 0, 1.0, sd), 0.0)
    ideal = norm.min(axis=0)
    row_norms = np.linalg.norm(norm, axis=1)
    ideal_norm = float(np.linalg.norm(ideal))
    sims = np.zeros(n_p)
    if ideal_norm > 0:
        ok = row_norms > 0
        sims[ok] = (norm[ok] @ ideal) / (row_norms[ok] * ideal_norm)
    return SelectionResult(
        norm_values=norm, ideal=ideal, similarities=sims, chosen=int(np.argmax(sims))
    )


def _front_for_mode(values: np.ndarray, cfg: RunConfig) -> list[int]:
    """Non-dominated indices under the active objective mode.

    Single-objective modes degenerate dominance to a scalar comparison, so
    the front is exactly the set of minimizers of that objective.
    """
    if cfg.objective_mode == "multi":
        return pareto_front(values, cfg.dominance_mode)
    col = 0 if cfg.objective_mode == "f_only" else 1
    v = values[:, col]
    finite = np.isfinite(v)
    if not finite.any():
        raise ValueError("no candidate has finite objective values")
    best = v[finite].min()
    return [int(i) for i in np.flatnonzero(finite & (v == best))]


def _select_for_mode(front_values: np.ndarray, cfg: RunConfig) -> SelectionResult:
    if cfg.objective_mode == "multi":
        return select_final(front_values)
    # scalar modes: the front already holds only exact minimizers, so the
    # argmin tie-break is the lowest front position
    n_p = front_values.shape[0]
    return SelectionResult(
        norm_values=np.zeros((n_p, 2)),
        ideal=np.zeros(2),
        similarities=np.zeros(n_p),
        chosen=0,
    )


def _pool_fingerprint(centers: list[np.ndarray]) -> str:
    h = hashlib.sha256()
    for c in centers:
        h.update(np.ascontiguousarray(c, dtype=float).tobytes())
    return h.hexdigest()


def run(ds: Dataset, cfg: RunConfig, threads: int = 1) -> RunReport:
    """Execute the full optimization loop and return its trace.

    Per iteration: evaluate every member's (f, g) on the fixed fold
    partition, record the front, and give every dominated member one
    gradient step per cluster using a point sampled from that cluster
    (empty clusters are skipped, or re-seeded to a random data row when
    ``cfg.reseed_empty`` is set). Front members are left untouched. Updates
    are skipped on the final iteration since nothing is evaluated after it;
    the selection therefore sees centers exactly as last scored.

    Identical (dataset, config) pairs produce identical reports regardless
    of ``threads``.
    """
    t0 = time.perf_counter()
    pool = init_pool(ds, cfg)
    centers = [np.array(c.centers) for c in pool]
    pool_k = tuple(c.k for c in pool)
    init_fingerprint = _pool_fingerprint(centers)
    folds = make_folds(ds.n, cfg.M, cfg.seed)
    sgd_rngs = [
        np.random.default_rng([cfg.seed, _STREAM_SGD, i]) for i in range(cfg.n_pool)
    ]
    z = ds.features
    y = ds.outcome

    history = np.empty((cfg.tau_max, cfg.n_pool, 2))
    front_history: list[list[int]] = []
    nonfinite: set[int] = set()

    def evaluate(i: int) -> tuple[Allocation, float, float]:
        alloc = allocation_distance(ds, CandidateSet(centers[i]))
        return alloc, clustering_cost(alloc), cv_rmse(alloc, y, folds)

    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for tau in range(cfg.tau_max):
            if executor is not None:
                results = list(executor.map(evaluate, range(cfg.n_pool)))
            else:
                results = [evaluate(i) for i in range(cfg.n_pool)]
            allocs = [r[0] for r in results]
            values = np.array([[r[1], r[2]] for r in results])
            history[tau] = values
            bad = np.flatnonzero(~np.isfinite(values).all(axis=1))
            nonfinite.update(int(i) for i in bad)
            front = _front_for_mode(values, cfg)
            front_history.append(front)
            if tau == cfg.tau_max - 1:
                break
            front_set = set(front)

            def update(i: int) -> None:
                if i in front_set:
                    return
                alloc = allocs[i]
                rng = sgd_rngs[i]
                cur = centers[i]
                for j in range(cur.shape[0]):
                    members = np.flatnonzero(alloc.labels == j)
                    if members.size == 0:
                        if cfg.reseed_empty:
                            cur[j] = z[rng.integers(ds.n)]
                        continue
                    sample = z[members[rng.integers(members.size)]]
                    a = learning_rate(cfg, int(alloc.counts[j]))
                    cur[j] = sgd_update(cur[j], sample, a)

            if executor is not None:
                list(executor.map(update, range(cfg.n_pool)))
            else:
                for i in range(cfg.n_pool):
                    update(i)
    finally:
        if executor is not None:
            executor.shutdown()

    front = front_history[-1]
    selection = _select_for_mode(history[-1, front], cfg)
    selected_index = front[selection.chosen]
    selected = CandidateSet(centers=centers[selected_index].copy())
    selected_alloc = allocation_distance(ds, selected)
    k_frequency = {k: 0 for k in range(2, cfg.K + 1)}
    for i in front:
        k_frequency[pool_k[i]] += 1

    return RunReport(
        config=cfg,
        n=ds.n,
        d=ds.d,
        pool_k=pool_k,
        history=history,
        front_history=front_history,
        front_indices=front,
        selection=selection,
        selected_index=selected_index,
        selected=selected,
        selected_alloc=selected_alloc,
        k_frequency=k_frequency,
        init_pool_sha256=init_fingerprint,
        flags={"nonfinite_members": sorted(nonfinite)},
        wall_time_s=time.perf_counter() - t0,
        final_centers=centers,
    )
