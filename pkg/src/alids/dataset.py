"""Flow-record ingestion: CSV loading, encoding, label binarization, split.

A dataset is described by a :class:`FeatureSchema` (column names and kinds),
loaded into raw string records, then encoded into a dense float matrix:
numeric columns are min-max normalized to [0, 1] (clamped for out-of-range
values seen later), categorical columns expand into one-hot groups over the
categories seen at fit time, and unseen categories encode to an all-zeros
group.
"""

from __future__ import annotations

import base64
import csv
import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import ConfigError, DatasetError, SchemaError

COLUMN_KINDS = ("numeric", "categorical", "ignored")


@dataclass(frozen=True)
class FeatureSchema:
    """Column layout of a flow-record CSV.

    ``columns`` lists every CSV column in order as (name, kind). The label
    column is named separately and never becomes a feature, whatever its
    kind says.
    """

    columns: tuple[tuple[str, str], ...]
    label_column: str
    normal_label: str
    has_header: bool = True

    def __post_init__(self) -> None:
        names = [name for name, _ in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("column names must be unique")
        for name, kind in self.columns:
            if kind not in COLUMN_KINDS:
                raise SchemaError(f"column {name!r}: unknown kind {kind!r}")
        if names.count(self.label_column) != 1:
            raise SchemaError(f"label column {self.label_column!r} not in schema")
        if not self.feature_columns():
            raise SchemaError("schema needs at least one non-ignored feature column")

    def feature_columns(self) -> list[tuple[str, str]]:
        """Non-ignored, non-label columns, in schema order."""
        return [
            (name, kind)
            for name, kind in self.columns
            if kind != "ignored" and name != self.label_column
        ]

    @property
    def label_index(self) -> int:
        return [name for name, _ in self.columns].index(self.label_column)

    def to_dict(self) -> dict:
        return {
            "columns": [{"name": n, "kind": k} for n, k in self.columns],
            "label_column": self.label_column,
            "normal_label": self.normal_label,
            "has_header": self.has_header,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureSchema":
        try:
            columns = tuple((c["name"], c["kind"]) for c in data["columns"])
            return cls(
                columns=columns,
                label_column=data["label_column"],
                normal_label=data["normal_label"],
                has_header=bool(data.get("has_header", True)),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema document: {exc}") from exc

    @classmethod
    def from_json_file(cls, path: str | Path) -> "FeatureSchema":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class RawRecord:
    """One CSV row: all field strings plus the extracted label string."""

    values: list[str]
    label: str


@dataclass(frozen=True)
class EncodedInstance:
    id: int
    features: np.ndarray
    label: int | None = None


@dataclass
class EncodingMap:
    """Fitted per-column transforms: numeric ranges and category tables."""

    numeric: dict[str, tuple[float, float]]
    categories: dict[str, list[str]]
    feature_names: list[str]

    def to_dict(self) -> dict:
        return {
            "numeric": {k: list(v) for k, v in self.numeric.items()},
            "categories": dict(self.categories),
            "feature_names": list(self.feature_names),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EncodingMap":
        return cls(
            numeric={k: (float(v[0]), float(v[1])) for k, v in data["numeric"].items()},
            categories={k: list(v) for k, v in data["categories"].items()},
            feature_names=list(data["feature_names"]),
        )


@dataclass
class Provenance:
    source: str
    schema_digest: str

    def to_dict(self) -> dict:
        return {"source": self.source, "schema_digest": self.schema_digest}

    @classmethod
    def from_dict(cls, data: dict) -> "Provenance":
        return cls(source=data["source"], schema_digest=data["schema_digest"])


@dataclass
class EncodedDataset:
    """Immutable encoded view of a dataset: ids, feature matrix, labels."""

    ids: np.ndarray
    features: np.ndarray
    encoding_map: EncodingMap
    provenance: Provenance
    raw_labels: list[str] | None = None
    labels: np.ndarray | None = None
    unseen_category_count: int = 0
    schema: FeatureSchema | None = None

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    def instance(self, position: int) -> EncodedInstance:
        label = None if self.labels is None else int(self.labels[position])
        return EncodedInstance(
            id=int(self.ids[position]), features=self.features[position], label=label
        )

    def __iter__(self) -> Iterator[EncodedInstance]:
        return (self.instance(i) for i in range(len(self)))

    def subset(self, positions: np.ndarray) -> "EncodedDataset":
        return EncodedDataset(
            ids=self.ids[positions],
            features=self.features[positions],
            encoding_map=self.encoding_map,
            provenance=self.provenance,
            raw_labels=None
            if self.raw_labels is None
            else [self.raw_labels[i] for i in positions],
            labels=None if self.labels is None else self.labels[positions],
            unseen_category_count=self.unseen_category_count,
            schema=self.schema,
        )


def load_csv(path: str | Path, schema: FeatureSchema) -> list[RawRecord]:
    """Read an RFC-4180 CSV into raw records, checking arity per row."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    expected = len(schema.columns)
    label_idx = schema.label_index
    records: list[RawRecord] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = iter(reader)
        if schema.has_header:
            next(rows, None)
        for row_number, row in enumerate(rows, start=1):
            if not row:
                continue  # trailing blank line
            if len(row) != expected:
                raise DatasetError(
                    f"row {row_number}: expected {expected} fields, got {len(row)}"
                )
            records.append(RawRecord(values=list(row), label=row[label_idx]))
    return records


def fit_encoding(records: list[RawRecord], schema: FeatureSchema) -> EncodingMap:
    """Fit numeric ranges and category dictionaries on raw records."""
    if not records:
        raise DatasetError("cannot fit an encoding on zero records")
    col_names = [name for name, _ in schema.columns]
    numeric: dict[str, tuple[float, float]] = {}
    categories: dict[str, list[str]] = {}
    for name, kind in schema.feature_columns():
        idx = col_names.index(name)
        if kind == "numeric":
            lo = np.inf
            hi = -np.inf
            for rec in records:
                token = rec.values[idx]
                try:
                    v = float(token)
                except ValueError as exc:
                    raise DatasetError(
                        f"column {name!r}: non-numeric value {token!r}"
                    ) from exc
                lo = min(lo, v)
                hi = max(hi, v)
            numeric[name] = (lo, hi)
        elif kind == "categorical":
            categories[name] = sorted({rec.values[idx] for rec in records})

    feature_names: list[str] = []
    for name, kind in schema.feature_columns():
        if kind == "numeric":
            feature_names.append(name)
        else:
            feature_names.extend(f"{name}={cat}" for cat in categories[name])
    return EncodingMap(numeric=numeric, categories=categories, feature_names=feature_names)


def encode(
    records: list[RawRecord],
    encoding_map: EncodingMap,
    schema: FeatureSchema,
    source: str = "<memory>",
) -> EncodedDataset:
    """Encode raw records into the dense feature matrix.

    Ids are assigned 0..n-1 in input order. Out-of-range numerics clamp to
    [0, 1]; categories unseen at fit time become all-zero one-hot groups and
    are tallied in ``unseen_category_count``.
    """
    col_names = [name for name, _ in schema.columns]
    width = len(encoding_map.feature_names)
    x = np.zeros((len(records), width), dtype=np.float64)
    unseen = 0

    # (column csv-index, kind, feature offset, payload) per feature column
    layout: list[tuple[int, str, int, object]] = []
    offset = 0
    for name, kind in schema.feature_columns():
        idx = col_names.index(name)
        if kind == "numeric":
            layout.append((idx, "numeric", offset, encoding_map.numeric[name]))
            offset += 1
        else:
            cats = encoding_map.categories[name]
            lookup = {c: i for i, c in enumerate(cats)}
            layout.append((idx, "categorical", offset, (lookup, name)))
            offset += len(cats)

    for r, rec in enumerate(records):
        for idx, kind, off, payload in layout:
            token = rec.values[idx]
            if kind == "numeric":
                lo, hi = payload  # type: ignore[misc]
                try:
                    v = float(token)
                except ValueError as exc:
                    name = col_names[idx]
                    raise DatasetError(
                        f"column {name!r}: non-numeric value {token!r}"
                    ) from exc
                if hi > lo:
                    x[r, off] = min(max((v - lo) / (hi - lo), 0.0), 1.0)
                # constant columns encode to 0
            else:
                lookup, _name = payload  # type: ignore[misc]
                slot = lookup.get(token)
                if slot is None:
                    unseen += 1
                else:
                    x[r, off + slot] = 1.0

    return EncodedDataset(
        ids=np.arange(len(records), dtype=np.int64),
        features=x,
        encoding_map=encoding_map,
        provenance=Provenance(source=str(source), schema_digest=schema.digest()),
        raw_labels=[rec.label for rec in records],
        labels=None,
        unseen_category_count=unseen,
        schema=schema,
    )


def binarize_labels(dataset: EncodedDataset, normal_label: str) -> EncodedDataset:
    """Collapse raw labels to binary: normal -> 0, anything else -> 1."""
    if dataset.raw_labels is None:
        raise DatasetError("dataset carries no raw labels to binarize")
    missing = [int(dataset.ids[i]) for i, lab in enumerate(dataset.raw_labels) if lab == ""]
    if missing:
        raise DatasetError(f"missing labels for ids {missing}")
    labels = np.fromiter(
        (0 if lab == normal_label else 1 for lab in dataset.raw_labels),
        dtype=np.int8,
        count=len(dataset),
    )
    return EncodedDataset(
        ids=dataset.ids,
        features=dataset.features,
        encoding_map=dataset.encoding_map,
        provenance=dataset.provenance,
        raw_labels=dataset.raw_labels,
        labels=labels,
        unseen_category_count=dataset.unseen_category_count,
        schema=dataset.schema,
    )


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split(
    dataset: EncodedDataset,
    train_fraction: float,
    seed: int,
    stratify: bool = False,
) -> tuple[EncodedDataset, EncodedDataset]:
    """Shuffle with a seeded RNG and split; |train| = round(fraction * n)."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must be in (0,1), got {train_fraction}")
    n = len(dataset)
    if n == 0:
        raise DatasetError("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    if stratify and dataset.labels is not None:
        train_positions: list[np.ndarray] = []
        test_positions: list[np.ndarray] = []
        for cls in np.unique(dataset.labels):
            members = np.nonzero(dataset.labels == cls)[0]
            perm = members[rng.permutation(members.size)]
            k = _round_half_up(train_fraction * members.size)
            train_positions.append(perm[:k])
            test_positions.append(perm[k:])
        train_pos = np.sort(np.concatenate(train_positions))
        test_pos = np.sort(np.concatenate(test_positions))
    else:
        perm = rng.permutation(n)
        k = _round_half_up(train_fraction * n)
        train_pos = perm[:k]
        test_pos = perm[k:]
    if train_pos.size == 0 or test_pos.size == 0:
        warnings.warn(
            f"degenerate split: {train_pos.size} train / {test_pos.size} test rows",
            stacklevel=2,
        )
    return dataset.subset(train_pos), dataset.subset(test_pos)


# ---------------------------------------------------------------------------
# Snapshot I/O (JSON, optionally carrying the encoded matrix)

def _encode_matrix(x: np.ndarray) -> dict:
    contiguous = np.ascontiguousarray(x, dtype=np.float64)
    return {
        "dtype": "float64",
        "shape": list(contiguous.shape),
        "data": base64.b64encode(contiguous.tobytes()).decode("ascii"),
    }


def _decode_matrix(blob: dict) -> np.ndarray:
    raw = base64.b64decode(blob["data"])
    arr = np.frombuffer(raw, dtype=np.dtype(blob["dtype"])).copy()
    return arr.reshape(blob["shape"])


def dataset_to_dict(dataset: EncodedDataset, include_matrix: bool = True) -> dict:
    doc: dict = {
        "version": 1,
        "encoding_map": dataset.encoding_map.to_dict(),
        "provenance": dataset.provenance.to_dict(),
        "ids": dataset.ids.tolist(),
        "raw_labels": dataset.raw_labels,
        "labels": None if dataset.labels is None else dataset.labels.tolist(),
        "unseen_category_count": dataset.unseen_category_count,
        "schema": None if dataset.schema is None else dataset.schema.to_dict(),
    }
    if include_matrix:
        doc["matrix"] = _encode_matrix(dataset.features)
    return doc


def dataset_from_dict(doc: dict) -> EncodedDataset:
    if doc.get("version") != 1:
        raise DatasetError(f"unsupported dataset snapshot version {doc.get('version')!r}")
    if "matrix" not in doc:
        raise DatasetError("dataset snapshot carries no encoded matrix")
    labels = doc.get("labels")
    schema = doc.get("schema")
    return EncodedDataset(
        ids=np.asarray(doc["ids"], dtype=np.int64),
        features=_decode_matrix(doc["matrix"]),
        encoding_map=EncodingMap.from_dict(doc["encoding_map"]),
        provenance=Provenance.from_dict(doc["provenance"]),
        raw_labels=doc.get("raw_labels"),
        labels=None if labels is None else np.asarray(labels, dtype=np.int8),
        unseen_category_count=int(doc.get("unseen_category_count", 0)),
        schema=None if schema is None else FeatureSchema.from_dict(schema),
    )


def save_dataset(dataset: EncodedDataset, path: str | Path) -> None:
    Path(path).write_text(json.dumps(dataset_to_dict(dataset)))


def load_dataset(path: str | Path) -> EncodedDataset:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot read dataset snapshot {path}: {exc}") from exc
    return dataset_from_dict(doc)


def decode_features(
    dataset: EncodedDataset, features: np.ndarray
) -> list[dict[str, object]]:
    """Invert the encoding for display: feature name, decoded value, normalized value.

    Numeric features map back through the min-max range; one-hot groups
    report the active category (or "<unseen>" for all-zero groups).
    """
    emap = dataset.encoding_map
    schema = dataset.schema
    out: list[dict[str, object]] = []
    if schema is None:
        for name, value in zip(emap.feature_names, features):
            out.append({"name": name, "decoded": float(value), "normalized": float(value)})
        return out
    offset = 0
    for name, kind in schema.feature_columns():
        if kind == "numeric":
            lo, hi = emap.numeric[name]
            norm = float(features[offset])
            out.append(
                {"name": name, "decoded": lo + norm * (hi - lo), "normalized": norm}
            )
            offset += 1
        else:
            cats = emap.categories[name]
            group = features[offset : offset + len(cats)]
            active = int(np.argmax(group)) if group.size and group.max() > 0 else -1
            out.append(
                {
                    "name": name,
                    "decoded": cats[active] if active >= 0 else "<unseen>",
                    "normalized": float(group[active]) if active >= 0 else 0.0,
                }
            )
            offset += len(cats)
    return out
