"""Supervised learners: boosted trees, logistic (gradient-capable), committees."""

from __future__ import annotations

from types import ModuleType

import numpy as np

from ..errors import CapabilityError, ConfigError
from .boosting import (
    BoostConfig,
    BoostedModel,
    Tree,
    predict_margin,
    train,
)
from .boosting import model_from_dict as _boosted_from_dict
from .boosting import model_to_dict as _boosted_to_dict
from .boosting import predict_proba as _boosted_proba
from .committee import Committee, committee_posteriors, train_committee
from .linear import (
    LogisticConfig,
    LogisticModel,
    train_logistic,
)
from .linear import loss_gradient as _logistic_gradient
from .linear import model_from_dict as _logistic_from_dict
from .linear import model_to_dict as _logistic_to_dict
from .linear import predict_proba as _logistic_proba

__all__ = [
    "BoostConfig",
    "BoostedModel",
    "Committee",
    "LogisticConfig",
    "LogisticModel",
    "Tree",
    "committee_posteriors",
    "loss_gradient",
    "model_from_dict",
    "model_to_dict",
    "predict_margin",
    "predict_proba",
    "train",
    "train_committee",
    "train_logistic",
]


def predict_proba(model, x: np.ndarray, kernels: ModuleType | None = None):
    """Attack posterior for either model kind; scalar for a single instance."""
    if isinstance(model, BoostedModel):
        return _boosted_proba(model, x, kernels=kernels)
    if isinstance(model, LogisticModel):
        return _logistic_proba(model, x)
    raise ConfigError(f"unknown model type {type(model).__name__}")


def loss_gradient(model, x: np.ndarray, label: int) -> np.ndarray:
    """Log-loss gradient; only gradient-capable (logistic) models support it."""
    if not getattr(model, "has_gradient", False):
        raise CapabilityError(
            f"{getattr(model, 'kind', type(model).__name__)} model exposes no analytic gradient"
        )
    return _logistic_gradient(model, x, label)


def model_to_dict(model) -> dict:
    if isinstance(model, BoostedModel):
        return _boosted_to_dict(model)
    if isinstance(model, LogisticModel):
        return _logistic_to_dict(model)
    raise ConfigError(f"unknown model type {type(model).__name__}")


def model_from_dict(data: dict):
    kind = data.get("kind")
    if kind == "boosted_trees":
        return _boosted_from_dict(data)
    if kind == "logistic":
        return _logistic_from_dict(data)
    raise ConfigError(f"unknown model kind {kind!r}")
