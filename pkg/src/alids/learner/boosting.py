"""Second-order gradient-boosted trees on logistic loss, built from scratch.

Each round fits one regression tree to the first/second-order gradients of
the logistic loss at the current margins. Splits are found by exact greedy
search over all feature thresholds (midpoints between consecutive distinct
sorted values), maximizing the usual second-order gain

    gain = GL^2/(HL + lambda) + GR^2/(HR + lambda) - G^2/(H + lambda)

subject to both children's hessian sums reaching ``min_child_weight``.
Leaf weights are -G/(H + lambda), shrunk by the learning rate at storage
time, so prediction is just base logit + sum of leaf values.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import ModuleType

import numpy as np

from .._accel import kernels as default_kernels
from ..errors import ConfigError, TrainingError

PROBA_EPS = 1e-12


@dataclass(frozen=True)
class BoostConfig:
    rounds: int = 50
    learning_rate: float = 0.3
    max_depth: int = 4
    min_child_weight: float = 1.0
    l2_lambda: float = 1.0
    base_score: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.rounds < 0:
            raise ConfigError("rounds must be >= 0")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("learning_rate must be in (0,1]")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.min_child_weight < 0.0:
            raise ConfigError("min_child_weight must be >= 0")
        if self.l2_lambda < 0.0:
            raise ConfigError("l2_lambda must be >= 0")
        if not 0.0 < self.base_score < 1.0:
            raise ConfigError("base_score must be in (0,1)")


@dataclass
class Tree:
    """Flat array representation; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Tree":
        return cls(
            feature=np.asarray(data["feature"], dtype=np.int32),
            threshold=np.asarray(data["threshold"], dtype=np.float64),
            left=np.asarray(data["left"], dtype=np.int32),
            right=np.asarray(data["right"], dtype=np.int32),
            value=np.asarray(data["value"], dtype=np.float64),
        )


@dataclass
class BoostedModel:
    trees: list[Tree]
    config: BoostConfig
    n_features: int
    kind: str = "boosted_trees"
    has_gradient: bool = False

    @property
    def base_margin(self) -> float:
        p = self.config.base_score
        return float(np.log(p / (1.0 - p)))


def _sigmoid(margin: np.ndarray) -> np.ndarray:
    out = np.empty_like(margin)
    pos = margin >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-margin[pos]))
    e = np.exp(margin[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class _TreeBuilder:
    def __init__(self) -> None:
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def add(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def build(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value, dtype=np.float64),
        )


def _grow_tree(
    x: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    config: BoostConfig,
    backend: ModuleType,
) -> Tree:
    builder = _TreeBuilder()
    root = builder.add()
    stack: list[tuple[int, np.ndarray, int]] = [(root, np.arange(x.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        sub_x = np.ascontiguousarray(x[idx])
        sub_g = g[idx]
        sub_h = h[idx]
        found = None
        if depth < config.max_depth and idx.size >= 2:
            found = backend.best_split(
                sub_x, sub_g, sub_h, config.l2_lambda, config.min_child_weight
            )
        if found is None:
            g_sum = float(np.cumsum(sub_g)[-1])
            h_sum = float(np.cumsum(sub_h)[-1])
            builder.value[node] = (
                -g_sum / (h_sum + config.l2_lambda) * config.learning_rate
            )
            continue
        _gain, feat, thr = found
        go_left = sub_x[:, feat] < thr
        left_node = builder.add()
        right_node = builder.add()
        builder.feature[node] = feat
        builder.threshold[node] = thr
        builder.left[node] = left_node
        builder.right[node] = right_node
        stack.append((right_node, idx[~go_left], depth + 1))
        stack.append((left_node, idx[go_left], depth + 1))
    return builder.build()


def train(
    x: np.ndarray,
    y: np.ndarray,
    config: BoostConfig | None = None,
    kernels: ModuleType | None = None,
) -> BoostedModel:
    """Fit the boosted ensemble; deterministic for fixed (data order, config)."""
    config = config or BoostConfig()
    backend = kernels if kernels is not None else default_kernels
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] == 0:
        raise TrainingError("training needs at least one labeled instance")
    if x.shape[0] != y.shape[0]:
        raise TrainingError("feature/label row counts differ")

    model = BoostedModel(trees=[], config=config, n_features=x.shape[1])
    margins = np.full(x.shape[0], model.base_margin, dtype=np.float64)
    for _ in range(config.rounds):
        p = _sigmoid(margins)
        g = p - y
        h = p * (1.0 - p)
        tree = _grow_tree(x, g, h, config, backend)
        model.trees.append(tree)
        margins = margins + backend.tree_leaf_values(
            tree.feature, tree.threshold, tree.left, tree.right, tree.value, x
        )
    return model


def predict_margin(
    model: BoostedModel, x: np.ndarray, kernels: ModuleType | None = None
) -> np.ndarray:
    backend = kernels if kernels is not None else default_kernels
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape[1] != model.n_features:
        raise ConfigError(
            f"feature dimension mismatch: model has {model.n_features}, got {x.shape[1]}"
        )
    margins = np.full(x.shape[0], model.base_margin, dtype=np.float64)
    for tree in model.trees:
        margins = margins + backend.tree_leaf_values(
            tree.feature, tree.threshold, tree.left, tree.right, tree.value, x
        )
    return margins


def predict_proba(
    model: BoostedModel, x: np.ndarray, kernels: ModuleType | None = None
) -> np.ndarray | float:
    """Attack posterior(s); kept strictly inside (0,1)."""
    single = np.asarray(x).ndim == 1
    mat = np.atleast_2d(np.asarray(x, dtype=np.float64))
    p = _sigmoid(predict_margin(model, mat, kernels=kernels))
    p = np.clip(p, PROBA_EPS, 1.0 - PROBA_EPS)
    return float(p[0]) if single else p


def model_to_dict(model: BoostedModel) -> dict:
    return {
        "kind": model.kind,
        "n_features": model.n_features,
        "config": {
            "rounds": model.config.rounds,
            "learning_rate": model.config.learning_rate,
            "max_depth": model.config.max_depth,
            "min_child_weight": model.config.min_child_weight,
            "l2_lambda": model.config.l2_lambda,
            "base_score": model.config.base_score,
            "seed": model.config.seed,
        },
        "trees": [t.to_dict() for t in model.trees],
    }


def model_from_dict(data: dict) -> BoostedModel:
    config = BoostConfig(**data["config"])
    return BoostedModel(
        trees=[Tree.from_dict(t) for t in data["trees"]],
        config=config,
        n_features=int(data["n_features"]),
    )
