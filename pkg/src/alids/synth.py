"""Deterministic synthetic flow-record generators.

The real KDD'99 capture is not redistributable with the package, so the
benchmark and the examples run on a generated sample that keeps the KDD'99
column layout (41 attributes + label) and a comparable traffic mix: bulk
normal services, two high-volume flooding attacks, and two low-volume
attack families that overlap the normal traffic and force the learner to
refine its decision boundary.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .dataset import EncodedDataset, EncodingMap, FeatureSchema, Provenance

KDD99_NUMERIC = [
    "duration", "src_bytes", "dst_bytes", "land", "wrong_fragment", "urgent",
    "hot", "num_failed_logins", "logged_in", "num_compromised", "root_shell",
    "su_attempted", "num_root", "num_file_creations", "num_shells",
    "num_access_files", "num_outbound_cmds", "is_host_login", "is_guest_login",
    "count", "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate",
    "srv_rerror_rate", "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate",
    "dst_host_count", "dst_host_srv_count", "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate", "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
    "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate",
]

KDD99_CATEGORICAL = ["protocol_type", "service", "flag"]

KDD99_COLUMNS = [
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes",
    "land", "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in",
    "num_compromised", "root_shell", "su_attempted", "num_root",
    "num_file_creations", "num_shells", "num_access_files", "num_outbound_cmds",
    "is_host_login", "is_guest_login", "count", "srv_count", "serror_rate",
    "srv_serror_rate", "rerror_rate", "srv_rerror_rate", "same_srv_rate",
    "diff_srv_rate", "srv_diff_host_rate", "dst_host_count", "dst_host_srv_count",
    "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate", "dst_host_srv_serror_rate", "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
]


def kdd99_schema() -> FeatureSchema:
    columns = tuple(
        (name, "categorical" if name in KDD99_CATEGORICAL else "numeric")
        for name in KDD99_COLUMNS
    ) + (("label", "ignored"),)
    return FeatureSchema(
        columns=columns,
        label_column="label",
        normal_label="normal.",
        has_header=False,
    )


def _blank_row() -> dict[str, object]:
    row: dict[str, object] = {name: 0 for name in KDD99_COLUMNS}
    row["protocol_type"] = "tcp"
    row["service"] = "http"
    row["flag"] = "SF"
    return row


def _clip01(v: float) -> float:
    return float(min(max(v, 0.0), 1.0))


def _normal_http(rng: np.random.Generator) -> dict[str, object]:
    row = _blank_row()
    row["service"] = "http"
    row["duration"] = int(rng.exponential(3.0))
    row["src_bytes"] = int(rng.lognormal(5.5, 0.8))
    row["dst_bytes"] = int(rng.lognormal(7.0, 1.2))
    row["logged_in"] = 1
    row["count"] = int(rng.integers(1, 12))
    row["srv_count"] = int(rng.integers(1, 12))
    row["same_srv_rate"] = _clip01(rng.normal(0.95, 0.08))
    row["dst_host_count"] = int(rng.integers(5, 256))
    row["dst_host_srv_count"] = int(rng.integers(5, 256))
    row["dst_host_same_srv_rate"] = _clip01(rng.normal(0.9, 0.12))
    row["dst_host_same_src_port_rate"] = _clip01(rng.normal(0.1, 0.1))
    return row


def _normal_busy_http(rng: np.random.Generator) -> dict[str, object]:
    # Busy web server: connection counts and payload sizes push into the
    # attack band, but without error-rate anomalies.
    row = _normal_http(rng)
    row["count"] = int(rng.integers(20, 140))
    row["srv_count"] = int(rng.integers(20, 140))
    row["src_bytes"] = int(rng.lognormal(6.4, 0.8))
    row["dst_bytes"] = int(rng.lognormal(8.0, 1.0))
    row["same_srv_rate"] = _clip01(rng.normal(0.97, 0.04))
    row["serror_rate"] = _clip01(rng.normal(0.01, 0.02))
    row["rerror_rate"] = _clip01(rng.normal(0.02, 0.03))
    return row


def _normal_smtp(rng: np.random.Generator) -> dict[str, object]:
    row = _blank_row()
    row["service"] = "smtp"
    row["duration"] = int(rng.exponential(2.0))
    row["src_bytes"] = int(rng.lognormal(6.2, 0.6))
    row["dst_bytes"] = int(rng.lognormal(5.5, 0.7))
    row["logged_in"] = 1
    row["count"] = int(rng.integers(1, 8))
    row["srv_count"] = int(rng.integers(1, 8))
    row["same_srv_rate"] = _clip01(rng.normal(0.9, 0.1))
    row["dst_host_count"] = int(rng.integers(5, 128))
    row["dst_host_srv_count"] = int(rng.integers(5, 128))
    row["dst_host_same_srv_rate"] = _clip01(rng.normal(0.85, 0.15))
    return row


def _normal_ftp(rng: np.random.Generator) -> dict[str, object]:
    row = _blank_row()
    row["service"] = "ftp_data"
    row["duration"] = int(rng.exponential(20.0))
    row["src_bytes"] = int(rng.lognormal(8.0, 1.6))
    row["dst_bytes"] = int(rng.lognormal(3.0, 2.0))
    row["logged_in"] = int(rng.random() < 0.7)
    row["count"] = int(rng.integers(1, 6))
    row["srv_count"] = int(rng.integers(1, 6))
    row["same_srv_rate"] = _clip01(rng.normal(0.8, 0.2))
    row["dst_host_count"] = int(rng.integers(1, 64))
    row["dst_host_srv_count"] = int(rng.integers(1, 64))
    row["dst_host_same_src_port_rate"] = _clip01(rng.normal(0.3, 0.2))
    return row


def _normal_domain(rng: np.random.Generator) -> dict[str, object]:
    row = _blank_row()
    row["protocol_type"] = "udp"
    row["service"] = "domain_u"
    row["duration"] = 0
    row["src_bytes"] = int(rng.integers(20, 140))
    row["dst_bytes"] = int(rng.integers(40, 400))
    row["count"] = int(rng.integers(1, 30))
    row["srv_count"] = int(rng.integers(1, 30))
    row["same_srv_rate"] = _clip01(rng.normal(0.98, 0.04))
    row["dst_host_count"] = int(rng.integers(50, 256))
    row["dst_host_srv_count"] = int(rng.integers(50, 256))
    row["dst_host_same_srv_rate"] = _clip01(rng.normal(0.97, 0.05))
    return row


def _attack_neptune(rng: np.random.Generator) -> dict[str, object]:
    # SYN flood: half-open connections, no payload, saturated error rates.
    row = _blank_row()
    row["service"] = rng.choice(["http", "private", "telnet", "finger"])
    row["flag"] = "S0"
    row["src_bytes"] = 0
    row["dst_bytes"] = 0
    row["count"] = int(rng.integers(100, 512))
    row["srv_count"] = int(rng.integers(1, 20))
    row["serror_rate"] = _clip01(rng.normal(0.99, 0.02))
    row["srv_serror_rate"] = _clip01(rng.normal(0.99, 0.02))
    row["same_srv_rate"] = _clip01(rng.normal(0.05, 0.05))
    row["diff_srv_rate"] = _clip01(rng.normal(0.07, 0.05))
    row["dst_host_count"] = 255
    row["dst_host_srv_count"] = int(rng.integers(1, 30))
    row["dst_host_serror_rate"] = _clip01(rng.normal(0.99, 0.02))
    row["dst_host_srv_serror_rate"] = _clip01(rng.normal(0.99, 0.02))
    return row


def _attack_smurf(rng: np.random.Generator) -> dict[str, object]:
    # ICMP echo-reply flood with a characteristic payload size.
    row = _blank_row()
    row["protocol_type"] = "icmp"
    row["service"] = "ecr_i"
    row["flag"] = "SF"
    row["src_bytes"] = int(rng.normal(1032, 30))
    row["dst_bytes"] = 0
    row["count"] = int(rng.integers(200, 512))
    row["srv_count"] = int(rng.integers(200, 512))
    row["same_srv_rate"] = 1.0
    row["dst_host_count"] = 255
    row["dst_host_srv_count"] = 255
    row["dst_host_same_srv_rate"] = 1.0
    row["dst_host_same_src_port_rate"] = _clip01(rng.normal(0.9, 0.1))
    return row


def _attack_back(rng: np.random.Generator) -> dict[str, object]:
    # Web DoS: oversized request bodies at elevated-but-plausible rates, so
    # it sits in the same connection-count and payload band as a busy server.
    row = _normal_http(rng)
    row["src_bytes"] = int(rng.lognormal(8.8, 0.5))
    row["dst_bytes"] = int(rng.lognormal(7.5, 1.0))
    row["hot"] = int(rng.integers(0, 3))
    row["count"] = int(rng.integers(30, 160))
    row["srv_count"] = int(rng.integers(30, 160))
    row["same_srv_rate"] = _clip01(rng.normal(0.98, 0.03))
    return row


def _attack_probe(rng: np.random.Generator) -> dict[str, object]:
    # Port sweep: moderate scan rates, many services touched, connections
    # mostly rejected; count overlaps busy-server traffic.
    row = _blank_row()
    row["service"] = rng.choice(["private", "other", "eco_i"])
    row["flag"] = rng.choice(["REJ", "SF", "RSTR"])
    row["protocol_type"] = rng.choice(["tcp", "icmp"])
    row["duration"] = int(rng.exponential(1.0))
    row["src_bytes"] = int(rng.integers(0, 40))
    row["dst_bytes"] = int(rng.integers(0, 40))
    row["count"] = int(rng.integers(25, 120))
    row["srv_count"] = int(rng.integers(2, 20))
    row["diff_srv_rate"] = _clip01(rng.normal(0.55, 0.18))
    row["same_srv_rate"] = _clip01(rng.normal(0.15, 0.1))
    row["rerror_rate"] = _clip01(rng.normal(0.35, 0.2))
    row["srv_rerror_rate"] = _clip01(rng.normal(0.35, 0.2))
    row["dst_host_count"] = int(rng.integers(100, 256))
    row["dst_host_srv_count"] = int(rng.integers(1, 20))
    row["dst_host_diff_srv_rate"] = _clip01(rng.normal(0.7, 0.2))
    row["dst_host_same_src_port_rate"] = _clip01(rng.normal(0.6, 0.25))
    return row


def _normal_private_udp(rng: np.random.Generator) -> dict[str, object]:
    # Chatty UDP services: mild service diversity and occasional rejects,
    # adjacent to the probe signature but benign.
    row = _blank_row()
    row["protocol_type"] = "udp"
    row["service"] = rng.choice(["private", "other"])
    row["src_bytes"] = int(rng.integers(20, 300))
    row["dst_bytes"] = int(rng.integers(20, 300))
    row["count"] = int(rng.integers(5, 60))
    row["srv_count"] = int(rng.integers(3, 40))
    row["diff_srv_rate"] = _clip01(rng.normal(0.25, 0.12))
    row["same_srv_rate"] = _clip01(rng.normal(0.7, 0.15))
    row["rerror_rate"] = _clip01(rng.normal(0.08, 0.07))
    row["dst_host_count"] = int(rng.integers(20, 200))
    row["dst_host_srv_count"] = int(rng.integers(10, 120))
    row["dst_host_diff_srv_rate"] = _clip01(rng.normal(0.25, 0.15))
    return row


# Mix loosely follows the real KDD'99 10% sample: the two flood attacks
# dominate, the stealthier families are rare, normals are diverse.
_PROFILES = [
    ("normal.", _normal_http, 0.16),
    ("normal.", _normal_busy_http, 0.085),
    ("normal.", _normal_smtp, 0.08),
    ("normal.", _normal_ftp, 0.08),
    ("normal.", _normal_domain, 0.07),
    ("normal.", _normal_private_udp, 0.07),
    ("neptune.", _attack_neptune, 0.18),
    ("smurf.", _attack_smurf, 0.22),
    ("back.", _attack_back, 0.025),
    ("satan.", _attack_probe, 0.03),
]


def generate_kdd99_rows(n: int, seed: int = 0) -> list[list[str]]:
    """Generate n KDD'99-layout rows (42 fields, label last)."""
    rng = np.random.default_rng(seed)
    labels = [p[0] for p in _PROFILES]
    weights = np.asarray([p[2] for p in _PROFILES])
    weights = weights / weights.sum()
    makers = [p[1] for p in _PROFILES]
    picks = rng.choice(len(_PROFILES), size=n, p=weights)
    rows = []
    for pick in picks:
        row = makers[pick](rng)
        fields = []
        for name in KDD99_COLUMNS:
            v = row[name]
            if isinstance(v, float):
                fields.append(f"{v:.4f}")
            else:
                fields.append(str(v))
        fields.append(labels[pick])
        rows.append(fields)
    return rows


def write_kdd99_csv(path: str | Path, n: int, seed: int = 0) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerows(generate_kdd99_rows(n, seed))


def blobs_dataset(
    n: int = 500,
    seed: int = 0,
    separation: float = 4.0,
    attack_fraction: float = 0.4,
    source: str = "<blobs>",
) -> EncodedDataset:
    """Two 2-D Gaussian blobs as an EncodedDataset (for tests and demos)."""
    rng = np.random.default_rng(seed)
    n_attack = int(round(n * attack_fraction))
    n_normal = n - n_attack
    normal = rng.normal(0.0, 1.0, size=(n_normal, 2))
    attack = rng.normal(separation, 1.0, size=(n_attack, 2))
    x = np.vstack([normal, attack])
    y = np.concatenate([np.zeros(n_normal, dtype=np.int8), np.ones(n_attack, dtype=np.int8)])
    perm = rng.permutation(n)
    x = x[perm]
    y = y[perm]
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    x = (x - lo) / (hi - lo)
    return EncodedDataset(
        ids=np.arange(n, dtype=np.int64),
        features=np.ascontiguousarray(x),
        encoding_map=EncodingMap(
            numeric={"f0": (float(lo[0]), float(hi[0])), "f1": (float(lo[1]), float(hi[1]))},
            categories={},
            feature_names=["f0", "f1"],
        ),
        provenance=Provenance(source=source, schema_digest="synthetic-blobs"),
        raw_labels=["attack." if v else "normal." for v in y],
        labels=y,
    )
