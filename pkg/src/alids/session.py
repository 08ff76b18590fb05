"""Active-learning session: train -> select -> label -> retrain.

A session owns the labeled/pool partition over the training split, the
current model, the precision/recall curve measured on the held-out test
split, and the stop rule. Labels arrive either from a dataset oracle
(benchmarks) or from an external annotator via :meth:`Session.submit_label`;
both paths drive the identical state machine, so curves are reproducible
bit-for-bit given the same label sequence and seeds.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from types import ModuleType
from typing import Iterable

import numpy as np

from . import lof, query
from .dataset import EncodedDataset, dataset_from_dict, dataset_to_dict
from .errors import (
    ConfigError,
    LabelRejected,
    SessionError,
    SnapshotError,
)
from .learner import (
    BoostConfig,
    LogisticConfig,
    committee_posteriors,
    model_from_dict,
    model_to_dict,
    predict_proba,
    train,
    train_committee,
    train_logistic,
)
from .query import CandidateScore, QueryStrategy

SNAPSHOT_VERSION = 1
_SEED_SPACE = 2**63


class Status(str, Enum):
    AWAITING_LABEL = "awaiting_label"
    RUNNING = "running"
    STOPPED_SUCCESS = "stopped_success"
    STOPPED_BUDGET = "stopped_budget"


ACTIVE_STATUSES = (Status.AWAITING_LABEL, Status.RUNNING)


@dataclass(frozen=True)
class StopRule:
    precision_min: float = 0.99
    recall_min: float = 0.99
    label_budget: int = 1000
    max_rounds: int = 100_000

    def __post_init__(self) -> None:
        for name in ("precision_min", "recall_min"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ConfigError(f"{name} must be in (0,1], got {v}")
        if self.label_budget < 1:
            raise ConfigError("label_budget must be >= 1")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")


@dataclass(frozen=True)
class SessionConfig:
    strategy: QueryStrategy = field(default_factory=QueryStrategy)
    boost: BoostConfig = field(default_factory=BoostConfig)
    logistic: LogisticConfig = field(default_factory=LogisticConfig)
    learner_kind: str = "boosted"
    stop: StopRule = field(default_factory=StopRule)
    seeding: str = "lof"
    seed_count: int = 10
    batch_size: int = 1
    lof_k: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learner_kind not in ("boosted", "logistic"):
            raise ConfigError(f"unknown learner kind {self.learner_kind!r}")
        if self.seeding not in ("lof", "random"):
            raise ConfigError(f"unknown seeding policy {self.seeding!r}")
        if self.seed_count < 1:
            raise ConfigError("seed_count must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.lof_k < 1:
            raise ConfigError("lof_k must be >= 1")
        if self.strategy.kind == "egl" and self.learner_kind != "logistic":
            raise ConfigError("the EGL strategy requires the gradient-capable logistic learner")

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.to_dict(),
            "boost": {
                "rounds": self.boost.rounds,
                "learning_rate": self.boost.learning_rate,
                "max_depth": self.boost.max_depth,
                "min_child_weight": self.boost.min_child_weight,
                "l2_lambda": self.boost.l2_lambda,
                "base_score": self.boost.base_score,
                "seed": self.boost.seed,
            },
            "logistic": {
                "epochs": self.logistic.epochs,
                "learning_rate": self.logistic.learning_rate,
                "l2": self.logistic.l2,
                "seed": self.logistic.seed,
            },
            "learner_kind": self.learner_kind,
            "stop": {
                "precision_min": self.stop.precision_min,
                "recall_min": self.stop.recall_min,
                "label_budget": self.stop.label_budget,
                "max_rounds": self.stop.max_rounds,
            },
            "seeding": self.seeding,
            "seed_count": self.seed_count,
            "batch_size": self.batch_size,
            "lof_k": self.lof_k,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionConfig":
        known = {
            "strategy", "boost", "logistic", "learner_kind", "stop",
            "seeding", "seed_count", "batch_size", "lof_k", "seed",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown session config keys: {sorted(unknown)}")
        kwargs: dict = {}
        if "strategy" in data:
            kwargs["strategy"] = QueryStrategy.from_dict(data["strategy"])
        if "boost" in data:
            kwargs["boost"] = BoostConfig(**data["boost"])
        if "logistic" in data:
            kwargs["logistic"] = LogisticConfig(**data["logistic"])
        if "stop" in data:
            kwargs["stop"] = StopRule(**data["stop"])
        for key in ("learner_kind", "seeding", "seed_count", "batch_size", "lof_k", "seed"):
            if key in data:
                kwargs[key] = data[key]
        return cls(**kwargs)


@dataclass
class CurvePoint:
    round: int
    labels_used: int
    precision: float
    recall: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "labels_used": self.labels_used,
            "precision": self.precision,
            "recall": self.recall,
            "degenerate": self.degenerate,
        }


@dataclass
class QueryRequest:
    ids: list[int]
    features: np.ndarray
    posteriors: list[float] | None
    lof_scores: list[float]
    strategy: str


@dataclass
class SessionUpdate:
    status: Status
    point: CurvePoint | None
    disagreement: bool
    pending_remaining: int


class Oracle:
    """Label source: ground-truth lookup (dataset) or a human (external)."""

    def __init__(self, kind: str, labels: dict[int, int] | None = None):
        if kind not in ("dataset", "external"):
            raise ConfigError(f"unknown oracle kind {kind!r}")
        self.kind = kind
        self._labels = labels or {}

    @classmethod
    def dataset(cls, labels: dict[int, int]) -> "Oracle":
        return cls("dataset", labels)

    @classmethod
    def external(cls) -> "Oracle":
        return cls("external")

    def label_for(self, instance_id: int) -> int:
        if self.kind != "dataset":
            raise SessionError("external oracle answers only via submit_label")
        try:
            return self._labels[instance_id]
        except KeyError as exc:
            raise SessionError(f"oracle has no label for id {instance_id}") from exc


def evaluate(
    model, test_x: np.ndarray, test_y: np.ndarray, kernels: ModuleType | None = None
) -> tuple[float, float, bool]:
    """Precision and recall for the attack class at posterior threshold 0.5.

    0/0 is defined as 0 and reported via the degenerate flag.
    """
    p = np.asarray(predict_proba(model, test_x, kernels=kernels))
    pred = p >= 0.5
    actual = np.asarray(test_y).astype(bool)
    tp = int(np.count_nonzero(pred & actual))
    fp = int(np.count_nonzero(pred & ~actual))
    fn = int(np.count_nonzero(~pred & actual))
    degenerate = (tp + fp == 0) or (tp + fn == 0)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall, degenerate


class Session:
    """State machine for one active-learning run. Use :func:`init_session`."""

    def __init__(
        self,
        train_ds: EncodedDataset,
        test_ds: EncodedDataset,
        config: SessionConfig,
        kernels: ModuleType | None = None,
    ):
        self.train_ds = train_ds
        self.test_ds = test_ds
        self.config = config
        self.kernels = kernels
        self.status = Status.AWAITING_LABEL
        self.round = 0
        self.labeled: dict[int, int] = {}
        self.pending: list[int] = []
        self.curve: list[CurvePoint] = []
        self.disagreements: list[dict] = []
        self.model = None
        self.committee = None
        self.last_committee_seed: int | None = None

        ids = train_ds.ids.tolist()
        self.pool: list[int] = list(ids)
        self._pos = {int(i): p for p, i in enumerate(ids)}
        self.ground_truth: dict[int, int] | None = None
        if train_ds.labels is not None:
            self.ground_truth = {
                int(i): int(l) for i, l in zip(train_ds.ids, train_ds.labels)
            }
        self.rng = np.random.default_rng(config.seed)
        self.lof_by_id: dict[int, float] = {}
        self._init_lof_and_seeds()

    # -- construction helpers ------------------------------------------------

    def _init_lof_and_seeds(self) -> None:
        n = len(self.pool)
        if self.config.seed_count > n:
            raise ConfigError(
                f"seed_count {self.config.seed_count} exceeds pool size {n}"
            )
        if self.config.seed_count > self.config.stop.label_budget:
            raise ConfigError("seed_count exceeds the label budget")
        k = min(self.config.lof_k, n - 1)
        if k >= 1:
            scores = lof.lof_score_array(
                self.train_ds.features, lof.LofParams(k=k), kernels=self.kernels
            )
        else:
            scores = np.ones(n)
        self.lof_by_id = {
            int(i): float(s) for i, s in zip(self.train_ds.ids, scores)
        }
        if self.config.seeding == "lof":
            ranked = lof.rank_pool(
                [lof.LofScore(id=int(i), score=float(self.lof_by_id[int(i)])) for i in self.pool],
                top_fraction=1.0,
            )
            self.pending = ranked[: self.config.seed_count]
        else:
            self.pending = query.random_select(
                self.pool, int(self.rng.integers(_SEED_SPACE)), self.config.seed_count
            )

    # -- views ---------------------------------------------------------------

    @property
    def labels_used(self) -> int:
        return len(self.labeled)

    @property
    def active(self) -> bool:
        return self.status in ACTIVE_STATUSES

    def oracle(self) -> Oracle:
        if self.ground_truth is None:
            return Oracle.external()
        return Oracle.dataset(self.ground_truth)

    def _features_for(self, ids: Iterable[int]) -> np.ndarray:
        rows = [self._pos[int(i)] for i in ids]
        return self.train_ds.features[rows]

    def _request(self) -> QueryRequest:
        feats = self._features_for(self.pending)
        posteriors = None
        if self.model is not None:
            posteriors = [
                float(p)
                for p in np.atleast_1d(
                    np.asarray(predict_proba(self.model, feats, kernels=self.kernels))
                )
            ]
        return QueryRequest(
            ids=list(self.pending),
            features=feats,
            posteriors=posteriors,
            lof_scores=[self.lof_by_id[int(i)] for i in self.pending],
            strategy=self.config.strategy.kind,
        )

    # -- the loop ------------------------------------------------------------

    def next_query(self) -> QueryRequest | None:
        """The pending batch to label; None when the pool just ran out."""
        if not self.active:
            raise SessionError(f"session already stopped: {self.status.value}")
        if self.pending:
            return self._request()
        if not self.pool:
            self.status = Status.STOPPED_BUDGET
            return None
        batch = min(
            self.config.batch_size,
            len(self.pool),
            self.config.stop.label_budget - self.labels_used,
        )
        if batch < 1:
            self.status = Status.STOPPED_BUDGET
            return None
        self.pending = self._select_batch(batch)
        return self._request()

    def _select_batch(self, batch: int) -> list[int]:
        strategy = self.config.strategy
        pool_ids = list(self.pool)
        if strategy.kind == "random":
            return query.random_select(
                pool_ids, int(self.rng.integers(_SEED_SPACE)), batch
            )
        if self.model is None:
            raise SessionError("no model trained yet; the seed phase is incomplete")
        pool_x = self._features_for(pool_ids)

        if strategy.kind == "uncertainty":
            cand_ids = pool_ids
            p = np.asarray(predict_proba(self.model, pool_x, kernels=self.kernels))
            base = np.asarray(query.uncertainty_score(p, strategy.uncertainty_criterion))
        elif strategy.kind == "qbc":
            if self.committee is None:
                raise SessionError("qbc strategy has no trained committee")
            cand_ids = pool_ids
            members = committee_posteriors(self.committee, pool_x, kernels=self.kernels)
            base = np.asarray(
                query.qbc_disagreement(members, strategy.qbc_metric, strategy.qbc_soft)
            )
        elif strategy.kind == "egl":
            cand_ids = pool_ids
            base = query.egl_scores(self.model, pool_x, kernels=self.kernels)
        elif strategy.kind == "eer":
            cand_ids, base = self._eer_scores(pool_ids)
            if len(cand_ids) == 1:
                return cand_ids[:batch]
        else:  # pragma: no cover - validated at config time
            raise ConfigError(f"unknown strategy kind {strategy.kind!r}")

        if strategy.density is not None:
            weights = self._density_vs_pool(
                self._features_for(cand_ids), pool_x, strategy.density.beta
            )
            base = query.density_wrap(base, weights)
        scored = [CandidateScore(id=i, score=float(s)) for i, s in zip(cand_ids, base)]
        return query.select_next(scored, min(batch, len(scored)))

    def _density_vs_pool(
        self, cand_x: np.ndarray, pool_x: np.ndarray, beta: float
    ) -> np.ndarray:
        # Candidates are pool members: take the full mean similarity and
        # remove the self term so the mean runs over the *other* instances.
        n = pool_x.shape[0]
        if n == 1:
            return np.ones(cand_x.shape[0])
        mean_with_self = query.density_weights(cand_x, pool_x, beta=1.0)
        mean_excl = np.maximum((mean_with_self * n - 1.0) / (n - 1), 0.0)
        if beta == 0.0:
            return np.ones_like(mean_excl)
        return mean_excl**beta

    def _eer_scores(self, pool_ids: list[int]) -> tuple[list[int], np.ndarray]:
        strategy = self.config.strategy
        if strategy.eer_exact:
            cand_ids = list(pool_ids)
        else:
            size = min(strategy.eer_pool_sample, len(pool_ids))
            cand_ids = query.random_select(
                pool_ids, int(self.rng.integers(_SEED_SPACE)), size
            )
            cand_ids = sorted(cand_ids)
        if len(cand_ids) < 2:
            return cand_ids, np.zeros(len(cand_ids))
        cand_x = self._features_for(cand_ids)
        labeled_x, labeled_y = self._labeled_arrays()
        retrain = self._retrainer(exact=strategy.eer_exact)
        scores = np.empty(len(cand_ids))
        for row in range(len(cand_ids)):
            others = np.delete(np.arange(len(cand_ids)), row)
            scores[row] = query.eer_score(
                self.model,
                labeled_x,
                labeled_y,
                cand_x[others],
                cand_x[row],
                strategy.eer_loss,
                retrain,
                kernels=self.kernels,
            )
        return cand_ids, scores

    def _retrainer(self, exact: bool):
        if self.config.learner_kind == "logistic":
            cfg = self.config.logistic
            return lambda x, y: train_logistic(x, y, cfg)
        cfg = self.config.boost
        if not exact:
            cfg = replace(cfg, rounds=max(1, cfg.rounds // 5))
        kern = self.kernels
        return lambda x, y: train(x, y, cfg, kernels=kern)

    def submit_label(self, instance_id: int, label: int) -> SessionUpdate:
        """Record one label; retrains and evaluates when the batch completes."""
        if label not in (0, 1):
            raise ConfigError(f"label must be 0 or 1, got {label!r}")
        if not self.active:
            raise SessionError(f"session already stopped: {self.status.value}")
        instance_id = int(instance_id)
        if instance_id not in self.pending:
            raise LabelRejected(f"instance {instance_id} is not pending a label")

        disagreement = False
        effective = int(label)
        if self.ground_truth is not None:
            truth = self.ground_truth[instance_id]
            if truth != label:
                disagreement = True
                self.disagreements.append(
                    {"id": instance_id, "submitted": int(label), "ground_truth": truth}
                )
                effective = truth  # benchmarks stay comparable; truth wins

        self.pending.remove(instance_id)
        self.pool.remove(instance_id)
        self.labeled[instance_id] = effective

        point = None
        if not self.pending:
            point = self._retrain_and_evaluate()
        return SessionUpdate(
            status=self.status,
            point=point,
            disagreement=disagreement,
            pending_remaining=len(self.pending),
        )

    def _labeled_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        ids = list(self.labeled.keys())
        x = self._features_for(ids)
        y = np.asarray([self.labeled[i] for i in ids], dtype=np.float64)
        return x, y

    def _retrain_and_evaluate(self) -> CurvePoint:
        x, y = self._labeled_arrays()
        if self.config.learner_kind == "logistic":
            self.model = train_logistic(x, y, self.config.logistic)
        else:
            self.model = train(x, y, self.config.boost, kernels=self.kernels)
        if self.config.strategy.kind == "qbc":
            self.last_committee_seed = int(self.rng.integers(_SEED_SPACE))
            self.committee = train_committee(
                x,
                y,
                self.config.strategy.qbc_committee_size,
                self.config.logistic
                if self.config.learner_kind == "logistic"
                else self.config.boost,
                self.last_committee_seed,
                learner_kind=self.config.learner_kind,
                kernels=self.kernels,
            )
        self.round += 1
        precision, recall, degenerate = evaluate(
            self.model, self.test_ds.features, self.test_ds.labels, kernels=self.kernels
        )
        point = CurvePoint(
            round=self.round,
            labels_used=self.labels_used,
            precision=precision,
            recall=recall,
            degenerate=degenerate,
        )
        self.curve.append(point)
        self.check_stop()
        return point

    def check_stop(self) -> Status:
        """Apply the stop rule to the latest curve point.

        Success (both strict inequalities) takes precedence when the budget
        is exhausted on the same round.
        """
        if not self.curve:
            raise SessionError("check_stop needs at least one curve point")
        latest = self.curve[-1]
        rule = self.config.stop
        if latest.precision > rule.precision_min and latest.recall > rule.recall_min:
            self.status = Status.STOPPED_SUCCESS
        elif self.labels_used >= rule.label_budget or self.round >= rule.max_rounds:
            self.status = Status.STOPPED_BUDGET
        elif not self.pool:
            self.status = Status.STOPPED_BUDGET
        else:
            self.status = Status.RUNNING
        return self.status

    def curve_csv(self) -> str:
        buf = io.StringIO()
        buf.write("round,labels_used,precision,recall\n")
        for pt in self.curve:
            buf.write(f"{pt.round},{pt.labels_used},{pt.precision!r},{pt.recall!r}\n")
        return buf.getvalue()


def init_session(
    train_ds: EncodedDataset,
    test_ds: EncodedDataset,
    config: SessionConfig,
    kernels: ModuleType | None = None,
) -> Session:
    """Start a session: hide training labels behind the oracle, compute LOF
    scores, and queue the seed-phase queries."""
    if len(train_ds) == 0 or len(test_ds) == 0:
        raise ConfigError("train and test datasets must be non-empty")
    if test_ds.labels is None:
        raise ConfigError("the test split needs labels for evaluation")
    return Session(train_ds, test_ds, config, kernels=kernels)


def run_with_oracle(session: Session, oracle: Oracle | None = None) -> Session:
    """Drive the loop to completion with a dataset oracle."""
    oracle = oracle or session.oracle()
    if oracle.kind != "dataset":
        raise SessionError("run_with_oracle needs a dataset oracle")
    while session.active:
        request = session.next_query()
        if request is None:
            break
        for instance_id in request.ids:
            session.submit_label(instance_id, oracle.label_for(instance_id))
    return session


# ---------------------------------------------------------------------------
# Snapshot / restore

def snapshot(session: Session) -> bytes:
    doc = {
        "version": SNAPSHOT_VERSION,
        "config": session.config.to_dict(),
        "status": session.status.value,
        "round": session.round,
        "labeled": [[i, l] for i, l in session.labeled.items()],
        "pool": list(session.pool),
        "pending": list(session.pending),
        "curve": [pt.to_dict() for pt in session.curve],
        "disagreements": session.disagreements,
        "rng_state": session.rng.bit_generator.state,
        "model": None if session.model is None else model_to_dict(session.model),
        "last_committee_seed": session.last_committee_seed,
        "lof": [[i, s] for i, s in session.lof_by_id.items()],
        "ground_truth": None
        if session.ground_truth is None
        else {str(k): v for k, v in session.ground_truth.items()},
        "train": dataset_to_dict(session.train_ds),
        "test": dataset_to_dict(session.test_ds),
    }
    return json.dumps(doc).encode("utf-8")


def restore(payload: bytes, kernels: ModuleType | None = None) -> Session:
    try:
        doc = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"corrupted session snapshot: {exc}") from exc
    if doc.get("version") != SNAPSHOT_VERSION:
        raise SnapshotError(f"unsupported snapshot version {doc.get('version')!r}")
    try:
        config = SessionConfig.from_dict(doc["config"])
        session = Session.__new__(Session)
        session.train_ds = dataset_from_dict(doc["train"])
        session.test_ds = dataset_from_dict(doc["test"])
        session.config = config
        session.kernels = kernels
        session.status = Status(doc["status"])
        session.round = int(doc["round"])
        session.labeled = {int(i): int(l) for i, l in doc["labeled"]}
        session.pool = [int(i) for i in doc["pool"]]
        session.pending = [int(i) for i in doc["pending"]]
        session.curve = [
            CurvePoint(
                round=int(pt["round"]),
                labels_used=int(pt["labels_used"]),
                precision=float(pt["precision"]),
                recall=float(pt["recall"]),
                degenerate=bool(pt.get("degenerate", False)),
            )
            for pt in doc["curve"]
        ]
        session.disagreements = list(doc.get("disagreements", []))
        session.model = None if doc["model"] is None else model_from_dict(doc["model"])
        session.last_committee_seed = doc.get("last_committee_seed")
        session.lof_by_id = {int(i): float(s) for i, s in doc["lof"]}
        gt = doc.get("ground_truth")
        session.ground_truth = (
            None if gt is None else {int(k): int(v) for k, v in gt.items()}
        )
        session._pos = {int(i): p for p, i in enumerate(session.train_ds.ids.tolist())}
        session.rng = np.random.default_rng()
        session.rng.bit_generator.state = doc["rng_state"]
        session.committee = None
        if (
            config.strategy.kind == "qbc"
            and session.last_committee_seed is not None
            and session.labeled
        ):
            x, y = session._labeled_arrays()
            session.committee = train_committee(
                x,
                y,
                config.strategy.qbc_committee_size,
                config.logistic if config.learner_kind == "logistic" else config.boost,
                session.last_committee_seed,
                learner_kind=config.learner_kind,
                kernels=kernels,
            )
        return session
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"malformed session snapshot: {exc}") from exc
