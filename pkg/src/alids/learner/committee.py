"""Bootstrap-bagged committees for query-by-committee."""

from __future__ import annotations

from dataclasses import dataclass
from types import ModuleType

import numpy as np

from ..errors import ConfigError, TrainingError
from . import boosting, linear


@dataclass
class Committee:
    members: list
    seeds: list[int]

    @property
    def size(self) -> int:
        return len(self.members)


def train_committee(
    x: np.ndarray,
    y: np.ndarray,
    size: int,
    config,
    seed: int,
    learner_kind: str = "boosted",
    kernels: ModuleType | None = None,
) -> Committee:
    """Train ``size`` members, member i on a same-size bootstrap resample
    drawn from RNG seed ``seed ^ i``."""
    if size < 2:
        raise ConfigError(f"committee size must be >= 2, got {size}")
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = x.shape[0]
    if n == 0:
        raise TrainingError("committee training needs a non-empty labeled set")
    members = []
    seeds = []
    for i in range(size):
        member_seed = seed ^ i
        rng = np.random.default_rng(member_seed)
        idx = rng.integers(0, n, size=n)
        if learner_kind == "boosted":
            members.append(boosting.train(x[idx], y[idx], config, kernels=kernels))
        elif learner_kind == "logistic":
            members.append(linear.train_logistic(x[idx], y[idx], config))
        else:
            raise ConfigError(f"unknown learner kind {learner_kind!r}")
        seeds.append(member_seed)
    return Committee(members=members, seeds=seeds)


def committee_posteriors(
    committee: Committee, x: np.ndarray, kernels: ModuleType | None = None
) -> np.ndarray:
    """Member posteriors, shape (committee size, n rows)."""
    mat = np.atleast_2d(np.asarray(x, dtype=np.float64))
    rows = []
    for member in committee.members:
        if member.kind == "boosted_trees":
            rows.append(boosting.predict_proba(member, mat, kernels=kernels))
        else:
            rows.append(linear.predict_proba(member, mat))
    return np.vstack(rows)
