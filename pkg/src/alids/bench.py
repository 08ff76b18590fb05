"""Strategy benchmark: run the oracle-driven loop per (strategy, seed) and
compare labels-to-success against the random baseline."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import EncodedDataset
from .errors import ConfigError
from .query import QueryStrategy
from .session import SessionConfig, Status, init_session, run_with_oracle


@dataclass
class BenchStrategy:
    name: str
    strategy: QueryStrategy


@dataclass
class BenchConfig:
    strategies: list[BenchStrategy]
    repetitions: int = 20
    base_seed: int = 0
    session: SessionConfig = field(default_factory=SessionConfig)
    jobs: int = 1

    def __post_init__(self) -> None:
        if not self.strategies:
            raise ConfigError("benchmark needs at least one strategy")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        names = [s.name for s in self.strategies]
        if len(set(names)) != len(names):
            raise ConfigError("strategy names must be unique")


@dataclass
class RunResult:
    strategy: str
    seed: int
    status: str
    labels_to_success: int | None
    final_precision: float
    final_recall: float
    curve_csv: str


def _run_one(args: tuple) -> RunResult:
    train_doc, test_doc, config_doc, name, seed = args
    from .dataset import dataset_from_dict

    train_ds = dataset_from_dict(train_doc)
    test_ds = dataset_from_dict(test_doc)
    config = SessionConfig.from_dict(config_doc)
    try:
        session = run_with_oracle(init_session(train_ds, test_ds, config))
    except Exception as exc:
        raise RuntimeError(f"benchmark run failed: strategy={name} seed={seed}: {exc}") from exc
    last = session.curve[-1]
    return RunResult(
        strategy=name,
        seed=seed,
        status=session.status.value,
        labels_to_success=(
            session.labels_used if session.status is Status.STOPPED_SUCCESS else None
        ),
        final_precision=last.precision,
        final_recall=last.recall,
        curve_csv=session.curve_csv(),
    )


def run_bench(
    train_ds: EncodedDataset,
    test_ds: EncodedDataset,
    config: BenchConfig,
    out_dir: str | Path | None = None,
) -> dict:
    """Run every (strategy, repetition) pair; returns the summary document.

    When ``out_dir`` is given, per-run curve CSVs and ``summary.json`` are
    written there. Budget-censored runs count at the full budget for the
    median, and are reported under ``threshold_not_reached``.
    """
    from .dataset import dataset_to_dict

    train_doc = dataset_to_dict(train_ds)
    test_doc = dataset_to_dict(test_ds)

    tasks = []
    for spec in config.strategies:
        for rep in range(config.repetitions):
            seed = config.base_seed + rep
            session_cfg = SessionConfig.from_dict(
                {**config.session.to_dict(), "seed": seed, "strategy": spec.strategy.to_dict()}
            )
            tasks.append((train_doc, test_doc, session_cfg.to_dict(), spec.name, seed))

    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]

    budget = config.session.stop.label_budget
    per_strategy: dict[str, dict] = {}
    for spec in config.strategies:
        runs = [r for r in results if r.strategy == spec.name]
        effective = [
            r.labels_to_success if r.labels_to_success is not None else budget
            for r in runs
        ]
        per_strategy[spec.name] = {
            "runs": [
                {
                    "seed": r.seed,
                    "status": r.status,
                    "labels_to_success": r.labels_to_success,
                    "final_precision": r.final_precision,
                    "final_recall": r.final_recall,
                }
                for r in runs
            ],
            "median_labels_to_success": float(np.median(effective)),
            "threshold_not_reached": sum(
                1 for r in runs if r.labels_to_success is None
            ),
        }

    summary: dict = {"strategies": per_strategy, "budget": budget}
    if "random" in per_strategy:
        random_median = per_strategy["random"]["median_labels_to_success"]
        ratios = {}
        for name, block in per_strategy.items():
            if name == "random" or random_median == 0:
                continue
            ratios[name] = block["median_labels_to_success"] / random_median
        summary["labels_ratio_vs_random"] = ratios

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r in results:
            (out / f"curve_{r.strategy}_seed{r.seed}.csv").write_text(r.curve_csv)
        (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary
