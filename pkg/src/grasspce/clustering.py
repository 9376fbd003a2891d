"""K-means on the Grassmann manifold and adaptive selection of the cluster count.

Clusters minimize the sum of squared geodesic distances to their centroids,
with centroids given by Karcher means.  The number of clusters is chosen by
sweeping k upward and maximizing a silhouette-style score: the Fréchet
variance of the centroids divided by the summed within-cluster variances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConvergenceError
from .manifold import OrthoFrame, pairwise_distances, stack_frames
from .stats import KarcherConfig, frechet_variance, karcher_mean

_MAX_SWEEPS = 100
_PERFECT_SCORE = math.inf


@dataclass(frozen=True)
class ClusterSelectConfig:
    """Controls for the adaptive cluster-count search."""

    min_cluster_size: int = 5
    k_start: int = 2
    max_k: int | None = None
    restarts: int = 4
    seed: int = 0
    karcher: KarcherConfig = field(default_factory=KarcherConfig)

    def __post_init__(self):
        if self.min_cluster_size < 1:
            raise ValueError("min_cluster_size must be >= 1")
        if self.k_start < 2:
            raise ValueError("k_start must be >= 2")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass
class Clustering:
    """A partition of frames with per-cluster centroids and variances."""

    assignments: np.ndarray
    centroids: list
    within_variances: np.ndarray
    score: float
    objective: float
    warning: str | None = None

    @property
    def n_clusters(self) -> int:
        return len(self.centroids)

    def members(self, h: int) -> np.ndarray:
        """Indices of the points assigned to cluster ``h``."""
        return np.flatnonzero(self.assignments == h)


@dataclass(frozen=True)
class SweepEntry:
    """One row of the score-vs-k diagnostic table."""

    k: int
    score: float
    valid: bool
    min_size: int


def riemannian_kmeans(points, k: int, seed: int = 0, restarts: int = 1,
                      karcher: KarcherConfig | None = None) -> Clustering:
    """K-means under the geodesic distance, best of ``restarts`` runs by objective.

    Each run seeds centroids by greedy farthest-point selection (first pick
    random, deterministic in ``seed``), then alternates nearest-centroid
    assignment with Karcher-mean updates until the assignment stabilizes.
    Empty clusters are re-seeded with the point farthest from its centroid.
    """
    points = list(points)
    n_pts = len(points)
    if not 1 <= k <= n_pts:
        raise ValueError(f"need 1 <= k <= {n_pts}, got k={k}")
    cfg = karcher or KarcherConfig()
    stack = stack_frames(points)
    best = None
    for run in range(restarts):
        rng = np.random.default_rng([seed, run])
        result = _kmeans_once(points, stack, k, rng, cfg)
        if best is None or result.objective < best.objective:
            best = result
    if k >= 2:
        try:
            best.score = cluster_score(best)
        except (ConvergenceError, ValueError) as exc:
            best.score = math.nan
            best.warning = f"cluster score unavailable: {exc}"
    return best


def _kmeans_once(points, stack, k, rng, karcher_cfg) -> Clustering:
    n_pts = len(points)
    chosen = [int(rng.integers(n_pts))]
    min_d = pairwise_distances(stack, stack[chosen[0]][None]).ravel()
    while len(chosen) < k:
        cand = min_d.copy()
        cand[chosen] = -np.inf
        nxt = int(np.argmax(cand))
        chosen.append(nxt)
        min_d = np.minimum(min_d, pairwise_distances(stack, stack[nxt][None]).ravel())
    centroids = [points[i] for i in chosen]

    assignments = None
    prev_obj = math.inf
    repaired_prev = False
    for _ in range(_MAX_SWEEPS):
        dist = pairwise_distances(stack, stack_frames(centroids))
        new_assign = np.argmin(dist, axis=1)
        new_assign, repaired = _repair_empty(new_assign, dist, k)
        obj = float(np.sum(dist[np.arange(n_pts), new_assign] ** 2))
        # objective is non-increasing across sweeps, except when a repair
        # re-seeds an empty cluster
        if not repaired and not repaired_prev:
            assert obj <= prev_obj + 1e-7 * (1.0 + prev_obj), "k-means objective increased"
        if assignments is not None and np.array_equal(new_assign, assignments) and not repaired:
            break
        assignments = new_assign
        prev_obj = obj
        repaired_prev = repaired
        centroids = [
            karcher_mean([points[i] for i in np.flatnonzero(assignments == h)], karcher_cfg).mean
            for h in range(k)
        ]

    within = np.array([
        frechet_variance([points[i] for i in np.flatnonzero(assignments == h)], centroids[h])
        for h in range(k)
    ])
    sizes = np.bincount(assignments, minlength=k)
    objective = float(np.sum(sizes * within))
    return Clustering(
        assignments=assignments,
        centroids=centroids,
        within_variances=within,
        score=math.nan,
        objective=objective,
    )


def _repair_empty(assignments, dist, k):
    """Move the globally farthest point into each empty cluster."""
    assignments = assignments.copy()
    sizes = np.bincount(assignments, minlength=k)
    d_own = dist[np.arange(len(assignments)), assignments].copy()
    repaired = False
    for h in np.flatnonzero(sizes == 0):
        eligible = sizes[assignments] >= 2
        if not np.any(eligible):
            break
        cand = np.where(eligible, d_own, -np.inf)
        idx = int(np.argmax(cand))
        sizes[assignments[idx]] -= 1
        assignments[idx] = h
        sizes[h] = 1
        d_own[idx] = dist[idx, h]
        repaired = True
    return assignments, repaired


def cluster_score(clustering: Clustering) -> float:
    """Silhouette-style score: centroid Fréchet variance over summed within-variances.

    Returns +inf when every cluster has zero within-variance (a perfect split).
    """
    if clustering.n_clusters < 2:
        raise ValueError("cluster score needs at least two clusters")
    total_within = float(np.sum(clustering.within_variances))
    if total_within == 0.0:
        return _PERFECT_SCORE
    centroid_mean = karcher_mean(clustering.centroids).mean
    return frechet_variance(clustering.centroids, centroid_mean) / total_within


def sweep_cluster_counts(points, config: ClusterSelectConfig | None = None):
    """Run the adaptive k sweep; returns (best clustering, sweep table).

    k starts at ``config.k_start`` and grows until some cluster falls below
    ``config.min_cluster_size`` (that k is discarded) or ``max_k`` is reached.
    The clustering with the largest score among valid k wins.  If no k is
    valid, a single-cluster fallback with a warning is returned.
    """
    points = list(points)
    cfg = config or ClusterSelectConfig()
    n_pts = len(points)
    if n_pts < 2 * cfg.min_cluster_size:
        raise ValueError(
            f"need at least {2 * cfg.min_cluster_size} points for cluster selection, got {n_pts}"
        )
    entries: list[SweepEntry] = []
    best: Clustering | None = None
    k = cfg.k_start
    k_cap = min(cfg.max_k or n_pts, n_pts)
    while k <= k_cap:
        try:
            clustering = riemannian_kmeans(
                points, k, seed=cfg.seed, restarts=cfg.restarts, karcher=cfg.karcher
            )
        except ConvergenceError:
            if best is None:
                raise
            break  # centroids no longer well-defined this far out; stop the sweep
        sizes = np.bincount(clustering.assignments, minlength=k)
        valid = int(sizes.min()) >= cfg.min_cluster_size
        entries.append(SweepEntry(k, clustering.score, valid, int(sizes.min())))
        if not valid:
            break
        if not math.isnan(clustering.score) and (best is None or clustering.score > best.score):
            best = clustering
        k += 1
    if best is None:
        fallback = riemannian_kmeans(points, 1, seed=cfg.seed, karcher=cfg.karcher)
        fallback.warning = (
            "no cluster count produced clusters of at least "
            f"{cfg.min_cluster_size} points; falling back to a single cluster"
        )
        return fallback, entries
    return best, entries


def select_cluster_count(points, config: ClusterSelectConfig | None = None) -> Clustering:
    """Adaptive cluster-count selection; see :func:`sweep_cluster_counts`."""
    best, _ = sweep_cluster_counts(points, config)
    return best
