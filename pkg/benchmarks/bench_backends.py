"""Timing comparison: compiled Cython kernels vs the numpy fallback.

Usage: python benchmarks/bench_backends.py [--rows 4000] [--features 40]

Covers the three hot paths: boosted-tree training (split search dominates),
batch prediction (tree traversal), and LOF k-NN selection. Also verifies
that both backends produce identical models along the way.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from alids._accel import available_backends, get_kernels
from alids.learner import BoostConfig, predict_proba, train
from alids.lof import LofParams, lof_score_array


def _time(fn, repeat: int = 3) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=4000)
    parser.add_argument("--features", type=int, default=40)
    parser.add_argument("--rounds", type=int, default=30)
    parser.add_argument("--lof-k", type=int, default=20)
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; timing the numpy fallback only")

    rng = np.random.default_rng(0)
    x = rng.random((args.rows, args.features))
    y = (x[:, 0] + 0.5 * x[:, 1] + 0.1 * rng.normal(size=args.rows) > 0.7).astype(float)
    train_rows = min(500, args.rows)
    lof_rows = min(args.rows, 3000)

    config = BoostConfig(rounds=args.rounds)
    results: dict[str, dict[str, float]] = {}
    models = {}
    for name in backends:
        kernels = get_kernels(name)
        results[name] = {
            f"train {train_rows}x{args.features} ({args.rounds} rounds)": _time(
                lambda: train(x[:train_rows], y[:train_rows], config, kernels=kernels)
            ),
            f"predict {args.rows}x{args.features}": _time(
                lambda m=train(x[:train_rows], y[:train_rows], config, kernels=kernels): predict_proba(
                    m, x, kernels=kernels
                )
            ),
            f"lof {lof_rows}x{args.features} (k={args.lof_k})": _time(
                lambda: lof_score_array(
                    x[:lof_rows], LofParams(k=args.lof_k), kernels=kernels
                ),
                repeat=1,
            ),
        }
        models[name] = train(x[:train_rows], y[:train_rows], config, kernels=kernels)

    if len(models) == 2:
        same = all(
            t1.to_dict() == t2.to_dict()
            for t1, t2 in zip(models["compiled"].trees, models["numpy"].trees)
        )
        print(f"cross-backend model identity: {'identical trees' if same else 'MISMATCH'}")

    ops = list(next(iter(results.values())).keys())
    width = max(len(op) for op in ops) + 2
    header = f"{'operation':<{width}}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for op in ops:
        line = f"{op:<{width}}"
        for b in backends:
            line += f"{results[b][op] * 1e3:>10.1f}ms"
        if len(backends) == 2:
            line += f"{results['numpy'][op] / results['compiled'][op]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
