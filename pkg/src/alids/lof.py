"""Local Outlier Factor scoring for pre-screening the unlabeled pool.

Scores follow the standard density-ratio definition: reachability distance
against each neighbor's k-distance, local reachability density as the
inverse mean reachability, and the final score as the mean neighbor-to-self
density ratio. Duplicate clusters (all-zero reachability) get lrd = +inf,
and inf/inf ratios evaluate to 1 so scores stay total.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import ModuleType

import numpy as np

from ._accel import kernels as default_kernels
from .errors import ConfigError


@dataclass(frozen=True)
class LofParams:
    """Neighbor count for LOF; the metric is fixed to Euclidean."""

    k: int = 20

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigError(f"LOF neighbor count must be >= 1, got {self.k}")


@dataclass(frozen=True)
class LofScore:
    id: int
    score: float


def knn_distances(
    points: np.ndarray, k: int, kernels: ModuleType | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """k nearest neighbors of each point among the others.

    Returns (ids, dists) of shape (n, k), nearest first, distance ties
    broken by lower id. The k-distance of point i is ``dists[i, -1]``.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n = pts.shape[0]
    if n <= k:
        raise ConfigError(f"knn needs n >= k+1 points, got n={n}, k={k}")
    backend = kernels if kernels is not None else default_kernels
    return backend.knn(pts, k)


def lof_score_array(
    points: np.ndarray, params: LofParams, kernels: ModuleType | None = None
) -> np.ndarray:
    """LOF score per point, index-aligned with the input."""
    ids, dists = knn_distances(points, params.k, kernels=kernels)
    k_distance = dists[:, -1]
    reach = np.maximum(k_distance[ids], dists)
    mean_reach = reach.mean(axis=1)
    with np.errstate(divide="ignore"):
        lrd = np.where(mean_reach > 0.0, 1.0 / mean_reach, np.inf)
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = lrd[ids].mean(axis=1) / lrd
    return np.where(np.isnan(scores), 1.0, scores)


def lof_scores(
    points: np.ndarray, params: LofParams, kernels: ModuleType | None = None
) -> list[LofScore]:
    array = lof_score_array(points, params, kernels=kernels)
    return [LofScore(id=i, score=float(s)) for i, s in enumerate(array)]


def rank_pool(scores: list[LofScore], top_fraction: float = 1.0) -> list[int]:
    """Ids sorted by descending score (ties by ascending id), truncated to
    ceil(top_fraction * n)."""
    if not scores:
        raise ConfigError("rank_pool needs at least one score")
    if not 0.0 < top_fraction <= 1.0:
        raise ConfigError(f"top_fraction must be in (0,1], got {top_fraction}")
    keep = int(np.ceil(top_fraction * len(scores)))
    ordered = sorted(scores, key=lambda s: (-s.score, s.id))
    return [s.id for s in ordered[:keep]]
