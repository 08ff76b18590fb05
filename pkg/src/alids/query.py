"""Label-selection strategies.

Every strategy produces "higher = query first" scores so the final top-k
selection is strategy-agnostic; expected-error-reduction is negated
accordingly. Ties always break toward the lower instance id.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import CapabilityError, ConfigError
from .learner import predict_proba

STRATEGY_KINDS = ("uncertainty", "qbc", "egl", "eer", "random")
UNCERTAINTY_CRITERIA = ("entropy", "least_confident", "margin")
QBC_METRICS = ("vote_entropy", "avg_kl")
EER_LOSSES = ("zero_one", "log")


@dataclass(frozen=True)
class DensityConfig:
    """Information-density wrapper: cosine similarity to the pool, ^beta."""

    beta: float = 1.0

    def __post_init__(self) -> None:
        if self.beta < 0.0:
            raise ConfigError("density beta must be >= 0")


@dataclass(frozen=True)
class QueryStrategy:
    kind: str = "uncertainty"
    uncertainty_criterion: str = "entropy"
    qbc_metric: str = "vote_entropy"
    qbc_soft: bool = False
    qbc_committee_size: int = 5
    eer_loss: str = "log"
    eer_pool_sample: int = 100
    eer_exact: bool = False
    density: DensityConfig | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ConfigError(f"unknown strategy kind {self.kind!r}")
        if self.uncertainty_criterion not in UNCERTAINTY_CRITERIA:
            raise ConfigError(f"unknown uncertainty criterion {self.uncertainty_criterion!r}")
        if self.qbc_metric not in QBC_METRICS:
            raise ConfigError(f"unknown qbc metric {self.qbc_metric!r}")
        if self.qbc_committee_size < 2:
            raise ConfigError("qbc committee size must be >= 2")
        if self.eer_loss not in EER_LOSSES:
            raise ConfigError(f"unknown eer loss {self.eer_loss!r}")
        if self.eer_pool_sample < 1:
            raise ConfigError("eer_pool_sample must be >= 1")
        if self.density is not None and self.kind == "random":
            raise ConfigError("density weighting cannot wrap the random strategy")

    def to_dict(self) -> dict:
        doc: dict = {
            "kind": self.kind,
            "uncertainty_criterion": self.uncertainty_criterion,
            "qbc_metric": self.qbc_metric,
            "qbc_soft": self.qbc_soft,
            "qbc_committee_size": self.qbc_committee_size,
            "eer_loss": self.eer_loss,
            "eer_pool_sample": self.eer_pool_sample,
            "eer_exact": self.eer_exact,
            "density": None if self.density is None else {"beta": self.density.beta},
            "seed": self.seed,
        }
        return doc

    @classmethod
    def from_dict(cls, data: dict) -> "QueryStrategy":
        known = {
            "kind",
            "uncertainty_criterion",
            "qbc_metric",
            "qbc_soft",
            "qbc_committee_size",
            "eer_loss",
            "eer_pool_sample",
            "eer_exact",
            "density",
            "seed",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown strategy keys: {sorted(unknown)}")
        kwargs = dict(data)
        density = kwargs.pop("density", None)
        if density is not None:
            density = DensityConfig(beta=float(density.get("beta", 1.0)))
        return cls(density=density, **kwargs)


@dataclass(frozen=True)
class CandidateScore:
    id: int
    score: float


def binary_entropy(p: np.ndarray | float) -> np.ndarray | float:
    """Shannon entropy of a Bernoulli(p), in bits; 0 at p in {0, 1}."""
    arr = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(arr)
    interior = (arr > 0.0) & (arr < 1.0)
    q = arr[interior]
    out[interior] = -(q * np.log2(q) + (1.0 - q) * np.log2(1.0 - q))
    return float(out) if np.isscalar(p) or arr.ndim == 0 else out


def uncertainty_score(
    posterior: np.ndarray | float, criterion: str = "entropy"
) -> np.ndarray | float:
    """Uncertainty of a binary posterior; all criteria peak at p = 0.5."""
    p = np.asarray(posterior, dtype=np.float64)
    if criterion == "entropy":
        out = binary_entropy(p)
        return out
    if criterion == "least_confident":
        out = 1.0 - np.maximum(p, 1.0 - p)
    elif criterion == "margin":
        out = -np.abs(p - (1.0 - p))
    else:
        raise ConfigError(f"unknown uncertainty criterion {criterion!r}")
    return float(out) if np.isscalar(posterior) or p.ndim == 0 else out


def qbc_disagreement(
    member_posteriors: np.ndarray, metric: str = "vote_entropy", soft: bool = False
) -> np.ndarray | float:
    """Committee disagreement per instance.

    ``member_posteriors`` is (C,) for one instance or (C, n) for a pool.
    Hard vote entropy is the entropy of the attack-vote fraction; the soft
    variant takes the entropy of the mean posterior. Average KL measures the
    mean divergence of each member's binary distribution from the committee
    mean, in bits, with 0*log(0/q) treated as 0.
    """
    post = np.asarray(member_posteriors, dtype=np.float64)
    single = post.ndim == 1
    mat = post.reshape(-1, 1) if single else post
    c = mat.shape[0]
    if c < 2:
        raise ConfigError("qbc disagreement needs a committee of size >= 2")
    if metric == "vote_entropy":
        if soft:
            out = binary_entropy(mat.mean(axis=0))
        else:
            votes = (mat > 0.5).sum(axis=0)
            out = binary_entropy(votes / c)
    elif metric == "avg_kl":
        consensus = mat.mean(axis=0)
        out = np.zeros(mat.shape[1])
        for target, ref in ((mat, consensus), (1.0 - mat, 1.0 - consensus)):
            with np.errstate(divide="ignore", invalid="ignore"):
                term = target * np.log2(target / ref)
            out += np.where(target > 0.0, term, 0.0).mean(axis=0)
        out = np.maximum(out, 0.0)  # guard the tiny negative rounding case
    else:
        raise ConfigError(f"unknown qbc metric {metric!r}")
    out = np.asarray(out, dtype=np.float64)
    return float(out[0]) if single else out


def egl_scores(model, x: np.ndarray, kernels=None) -> np.ndarray:
    """Expected gradient length over both labels; closed form 2p(1-p)|(x,1)|."""
    if not getattr(model, "has_gradient", False):
        raise CapabilityError("EGL requires a gradient-capable model")
    mat = np.atleast_2d(np.asarray(x, dtype=np.float64))
    p = np.asarray(predict_proba(model, mat, kernels=kernels))
    norms = np.sqrt(np.einsum("ij,ij->i", mat, mat) + 1.0)
    return 2.0 * p * (1.0 - p) * norms


def egl_score(model, x: np.ndarray, kernels=None) -> float:
    return float(egl_scores(model, np.atleast_2d(x), kernels=kernels)[0])


def expected_pool_loss(posteriors: np.ndarray, loss: str) -> float:
    """Mean expected loss over a pool, with the model's own posteriors
    standing in for the unknown truth.

    zero_one: E[1{wrong}] = 1 - max(q, 1-q); log: the binary entropy of q
    in nats (the expected log-loss under q itself).
    """
    q = np.asarray(posteriors, dtype=np.float64)
    if loss == "zero_one":
        return float(np.mean(1.0 - np.maximum(q, 1.0 - q)))
    if loss == "log":
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = -(q * np.log(q) + (1.0 - q) * np.log(1.0 - q))
        return float(np.mean(np.where((q > 0.0) & (q < 1.0), ent, 0.0)))
    raise ConfigError(f"unknown eer loss {loss!r}")


def eer_score(
    model,
    labeled_x: np.ndarray,
    labeled_y: np.ndarray,
    pool_sample: np.ndarray,
    candidate: np.ndarray,
    loss: str,
    retrain: Callable[[np.ndarray, np.ndarray], object],
    kernels=None,
) -> float:
    """Negated expected loss after hypothetically labeling the candidate.

    For each label y in {0, 1}, retrains on labeled + (candidate, y),
    evaluates the mean loss over the pool sample under the retrained model,
    and weights by the current model's posterior for y. Higher is better.
    """
    pool_sample = np.atleast_2d(np.asarray(pool_sample, dtype=np.float64))
    if pool_sample.shape[0] == 0:
        raise ConfigError("eer_score needs a non-empty pool sample")
    candidate = np.asarray(candidate, dtype=np.float64).ravel()
    p_attack = float(predict_proba(model, candidate, kernels=kernels))
    expected = 0.0
    for y_hat, weight in ((0, 1.0 - p_attack), (1, p_attack)):
        retrained = retrain(
            np.vstack([labeled_x, candidate[None, :]]),
            np.append(labeled_y, float(y_hat)),
        )
        q = np.asarray(predict_proba(retrained, pool_sample, kernels=kernels))
        expected += weight * expected_pool_loss(q, loss)
    return -expected


def density_weights(
    candidates: np.ndarray, pool: np.ndarray, beta: float
) -> np.ndarray:
    """Representativeness of each candidate: mean cosine similarity to the
    pool (zero-norm pairs contribute 0), floored at 0, raised to beta."""
    cand = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    pool = np.atleast_2d(np.asarray(pool, dtype=np.float64))
    if pool.shape[0] == 0:
        raise ConfigError("density weighting needs a non-empty pool")
    cand_norm = np.linalg.norm(cand, axis=1)
    pool_norm = np.linalg.norm(pool, axis=1)
    dots = cand @ pool.T
    denom = cand_norm[:, None] * pool_norm[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = np.where(denom > 0.0, dots / denom, 0.0)
    mean_sim = np.maximum(sims.mean(axis=1), 0.0)
    if beta == 0.0:
        return np.ones_like(mean_sim)
    return mean_sim**beta


def density_wrap(base_scores: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return np.asarray(base_scores, dtype=np.float64) * np.asarray(weights, dtype=np.float64)


def select_next(pool_scores: Sequence[CandidateScore], batch: int) -> list[int]:
    """Top-``batch`` ids by descending score, ties toward ascending id."""
    if not pool_scores:
        raise ConfigError("select_next needs a non-empty pool")
    if batch < 1:
        raise ConfigError("batch must be >= 1")
    if batch > len(pool_scores):
        warnings.warn(
            f"batch {batch} exceeds pool size {len(pool_scores)}; returning full pool",
            stacklevel=2,
        )
        batch = len(pool_scores)
    ordered = sorted(pool_scores, key=lambda s: (-s.score, s.id))
    return [s.id for s in ordered[:batch]]


def random_select(pool_ids: Sequence[int], seed: int, batch: int) -> list[int]:
    """Uniform sample without replacement, deterministic per seed."""
    ids = list(pool_ids)
    if not ids:
        raise ConfigError("random_select needs a non-empty pool")
    rng = np.random.default_rng(seed)
    if batch >= len(ids):
        return [ids[i] for i in rng.permutation(len(ids))]
    chosen = rng.choice(len(ids), size=batch, replace=False)
    return [ids[i] for i in chosen]


def stream_decide(
    model, instance: np.ndarray, strategy: QueryStrategy, threshold: float, kernels=None
) -> str:
    """Stream-mode decision: 'query' when the uncertainty clears the threshold."""
    if strategy.kind != "uncertainty":
        raise ConfigError("stream mode supports only the uncertainty strategy")
    p = float(predict_proba(model, np.asarray(instance, dtype=np.float64), kernels=kernels))
    score = float(uncertainty_score(p, strategy.uncertainty_criterion))
    return "query" if score >= threshold else "discard"
