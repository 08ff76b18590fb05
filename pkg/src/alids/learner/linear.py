"""Logistic learner with analytic gradients.

Exists so the expected-gradient-length strategy has an exact gradient to
work with; the boosted model deliberately reports ``has_gradient = False``.
Training is deterministic full-batch gradient descent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, TrainingError
from .boosting import PROBA_EPS, _sigmoid


@dataclass(frozen=True)
class LogisticConfig:
    epochs: int = 300
    learning_rate: float = 0.5
    l2: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.learning_rate <= 0.0:
            raise ConfigError("learning_rate must be > 0")
        if self.l2 < 0.0:
            raise ConfigError("l2 must be >= 0")


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    config: LogisticConfig
    kind: str = "logistic"
    has_gradient: bool = True

    @property
    def n_features(self) -> int:
        return int(self.weights.shape[0])


def train_logistic(
    x: np.ndarray, y: np.ndarray, config: LogisticConfig | None = None
) -> LogisticModel:
    config = config or LogisticConfig()
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] == 0:
        raise TrainingError("training needs at least one labeled instance")
    n = x.shape[0]
    w = np.zeros(x.shape[1], dtype=np.float64)
    b = 0.0
    for _ in range(config.epochs):
        p = _sigmoid(x @ w + b)
        r = p - y
        w = w - config.learning_rate * (x.T @ r / n + config.l2 * w)
        b = b - config.learning_rate * float(r.mean())
    return LogisticModel(weights=w, bias=b, config=config)


def predict_proba(model: LogisticModel, x: np.ndarray) -> np.ndarray | float:
    single = np.asarray(x).ndim == 1
    mat = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if mat.shape[1] != model.n_features:
        raise ConfigError(
            f"feature dimension mismatch: model has {model.n_features}, got {mat.shape[1]}"
        )
    p = _sigmoid(mat @ model.weights + model.bias)
    p = np.clip(p, PROBA_EPS, 1.0 - PROBA_EPS)
    return float(p[0]) if single else p


def loss_gradient(model: LogisticModel, x: np.ndarray, label: int) -> np.ndarray:
    """Gradient of the logistic log-loss over (weights, bias): (p-y)*(x, 1)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    p = predict_proba(model, x)
    residual = p - float(label)
    return np.concatenate([residual * x, [residual]])


def model_to_dict(model: LogisticModel) -> dict:
    return {
        "kind": model.kind,
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "config": {
            "epochs": model.config.epochs,
            "learning_rate": model.config.learning_rate,
            "l2": model.config.l2,
            "seed": model.config.seed,
        },
    }


def model_from_dict(data: dict) -> LogisticModel:
    return LogisticModel(
        weights=np.asarray(data["weights"], dtype=np.float64),
        bias=float(data["bias"]),
        config=LogisticConfig(**data["config"]),
    )
