"""Command-line front door: prepare, lof, bench, serve, synth.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
"""

from __future__ import annotations

import json
import socket
import sys
from pathlib import Path

import click
import numpy as np

from . import synth
from .bench import BenchConfig, BenchStrategy, run_bench
from .dataset import (
    FeatureSchema,
    binarize_labels,
    dataset_to_dict,
    encode,
    fit_encoding,
    load_csv,
    load_dataset,
    split,
)
from .errors import AlidsError, ConfigError, SchemaError
from .lof import LofParams, lof_scores, rank_pool
from .query import QueryStrategy
from .session import SessionConfig


class _Cli(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (ConfigError, SchemaError) as exc:
            raise click.UsageError(str(exc)) from exc
        except AlidsError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)


@click.group(cls=_Cli)
def main() -> None:
    """Active-learning intrusion detection toolkit."""


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("schema_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--train-fraction", default=0.8, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--stratify", is_flag=True, help="Stratify the split by label.")
def prepare(csv_path, schema_path, out_dir, train_fraction, seed, stratify) -> None:
    """Encode a CSV dataset and write the train/test split manifest."""
    schema = FeatureSchema.from_json_file(schema_path)
    records = load_csv(csv_path, schema)
    emap = fit_encoding(records, schema)
    ds = binarize_labels(
        encode(records, emap, schema, source=str(csv_path)), schema.normal_label
    )
    train_ds, test_ds = split(ds, train_fraction, seed, stratify=stratify)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "dataset.json").write_text(json.dumps(dataset_to_dict(ds)))
    manifest = {
        "version": 1,
        "source": str(csv_path),
        "seed": seed,
        "train_fraction": train_fraction,
        "stratified": stratify,
        "train_ids": train_ds.ids.tolist(),
        "test_ids": test_ds.ids.tolist(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest))

    attacks = int(ds.labels.sum())
    click.echo(f"rows: {len(ds)}  train: {len(train_ds)}  test: {len(test_ds)}")
    click.echo(
        f"class balance: {attacks} attack / {len(ds) - attacks} normal "
        f"({attacks / len(ds):.1%} attack)"
    )
    if ds.unseen_category_count:
        click.echo(f"unseen categories at encode time: {ds.unseen_category_count}")


@main.command()
@click.argument("prepared_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("out_csv", type=click.Path(dir_okay=False))
@click.option("-k", "--neighbors", default=20, show_default=True)
def lof(prepared_dir, out_csv, neighbors) -> None:
    """Score a prepared dataset with the local outlier factor."""
    ds = load_dataset(Path(prepared_dir) / "dataset.json")
    if neighbors >= len(ds):
        raise ConfigError(f"k={neighbors} needs at least {neighbors + 1} rows, got {len(ds)}")
    scores = lof_scores(ds.features, LofParams(k=neighbors))
    order = rank_pool(scores, top_fraction=1.0)
    by_id = {s.id: s.score for s in scores}
    lines = ["id,score"]
    lines += [f"{ds.ids[i]},{by_id[i]!r}" for i in order]
    Path(out_csv).write_text("\n".join(lines) + "\n")
    click.echo(f"wrote {len(order)} scores to {out_csv}")


def _parse_bench_config(path: Path) -> tuple[Path, BenchConfig, Path]:
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    try:
        prepared = Path(doc["prepared_dir"])
        out_dir = Path(doc["out_dir"])
        strategies = [
            BenchStrategy(name=s["name"], strategy=QueryStrategy.from_dict(s["strategy"]))
            for s in doc["strategies"]
        ]
        session = SessionConfig.from_dict(doc.get("session", {}))
        config = BenchConfig(
            strategies=strategies,
            repetitions=int(doc.get("repetitions", 20)),
            base_seed=int(doc.get("base_seed", 0)),
            session=session,
            jobs=int(doc.get("jobs", 1)),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: malformed benchmark config: {exc}") from exc
    return prepared, config, out_dir


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
def bench(config_path) -> None:
    """Run the strategy benchmark described by a JSON config."""
    prepared, config, out_dir = _parse_bench_config(Path(config_path))
    ds = load_dataset(prepared / "dataset.json")
    manifest = json.loads((prepared / "manifest.json").read_text())
    pos = {int(i): p for p, i in enumerate(ds.ids.tolist())}
    train_ds = ds.subset(np.asarray([pos[i] for i in manifest["train_ids"]]))
    test_ds = ds.subset(np.asarray([pos[i] for i in manifest["test_ids"]]))

    summary = run_bench(train_ds, test_ds, config, out_dir=out_dir)
    for name, block in summary["strategies"].items():
        miss = block["threshold_not_reached"]
        note = f" ({miss} runs hit the budget)" if miss else ""
        click.echo(
            f"{name}: median labels to success = "
            f"{block['median_labels_to_success']:.0f}{note}"
        )
    for name, ratio in summary.get("labels_ratio_vs_random", {}).items():
        click.echo(f"{name} / random label ratio: {ratio:.3f}")
    click.echo(f"curves and summary written to {out_dir}")


@main.command()
@click.argument("out_csv", type=click.Path(dir_okay=False))
@click.option("--rows", default=10000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option(
    "--schema-out",
    type=click.Path(dir_okay=False),
    default=None,
    help="Also write the matching schema JSON.",
)
def synth_data(out_csv, rows, seed, schema_out) -> None:
    """Generate a synthetic KDD'99-layout sample."""
    synth.write_kdd99_csv(out_csv, rows, seed)
    if schema_out:
        Path(schema_out).write_text(json.dumps(synth.kdd99_schema().to_dict(), indent=2))
    click.echo(f"wrote {rows} rows to {out_csv}")


main.add_command(synth_data, name="synth")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8099, show_default=True)
@click.option(
    "--data-dir",
    type=click.Path(file_okay=False),
    required=True,
    help="Directory holding prepared datasets (one subdirectory per name).",
)
@click.option(
    "--snapshot-dir",
    type=click.Path(file_okay=False),
    required=True,
    help="Directory for session snapshots (resumed on restart).",
)
@click.option(
    "--frontend-dir",
    type=click.Path(file_okay=False),
    default=None,
    help="Optional static bundle to serve at /.",
)
def serve(host, port, data_dir, snapshot_dir, frontend_dir) -> None:
    """Run the labeling HTTP service."""
    import uvicorn

    from .service import create_app

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        raise ConfigError(f"cannot bind {host}:{port}: {exc}") from exc
    finally:
        probe.close()

    app = create_app(Path(data_dir), Path(snapshot_dir), frontend_dir=frontend_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
