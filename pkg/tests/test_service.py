from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from alids.dataset import dataset_to_dict, split
from alids.service import create_app
from alids.session import SessionConfig, StopRule, init_session, run_with_oracle
from alids.learner import BoostConfig
from alids.query import QueryStrategy
from alids.synth import blobs_dataset

SESSION_CONFIG = {
    "strategy": {"kind": "uncertainty"},
    "boost": {"rounds": 8},
    "stop": {
        "precision_min": 0.9,
        "recall_min": 0.9,
        "label_budget": 60,
        "max_rounds": 1000,
    },
    "seeding": "lof",
    "seed_count": 4,
    "batch_size": 1,
    "seed": 21,
}


def _register_dataset(data_dir: Path, name: str = "blobs", n: int = 150) -> None:
    ds = blobs_dataset(n, seed=5)
    train, test = split(ds, 0.8, seed=2)
    target = data_dir / name
    target.mkdir(parents=True)
    (target / "dataset.json").write_text(json.dumps(dataset_to_dict(ds)))
    manifest = {
        "version": 1,
        "source": "<blobs>",
        "seed": 2,
        "train_fraction": 0.8,
        "stratified": False,
        "train_ids": train.ids.tolist(),
        "test_ids": test.ids.tolist(),
    }
    (target / "manifest.json").write_text(json.dumps(manifest))


@pytest.fixture
def service(tmp_path):
    data_dir = tmp_path / "data"
    snapshot_dir = tmp_path / "snaps"
    data_dir.mkdir()
    _register_dataset(data_dir)
    app = create_app(data_dir, snapshot_dir)
    with TestClient(app) as client:
        yield client, data_dir, snapshot_dir


def _create_session(client, config=None) -> str:
    response = client.post(
        "/sessions", json={"dataset": "blobs", "config": config or SESSION_CONFIG}
    )
    assert response.status_code == 201, response.text
    return response.json()["session_id"]


class TestHealth:
    def test_healthz(self, service):
        client, _, _ = service
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.json()["status"] == "ok"

    def test_unknown_route_404(self, service):
        client, _, _ = service
        assert client.get("/nope").status_code == 404


class TestCreateSession:
    def test_valid_body_gives_201_and_retrievable_id(self, service):
        client, _, _ = service
        sid = _create_session(client)
        assert client.get(f"/sessions/{sid}/metrics").status_code == 200

    def test_negative_budget_400(self, service):
        client, _, _ = service
        config = dict(SESSION_CONFIG, stop=dict(SESSION_CONFIG["stop"], label_budget=-5))
        response = client.post("/sessions", json={"dataset": "blobs", "config": config})
        assert response.status_code == 400

    def test_unknown_dataset_404(self, service):
        client, _, _ = service
        response = client.post("/sessions", json={"dataset": "ghost", "config": SESSION_CONFIG})
        assert response.status_code == 404

    def test_non_json_body_400(self, service):
        client, _, _ = service
        response = client.post("/sessions", content=b"not json")
        assert response.status_code == 400


class TestQueryEndpoint:
    def test_fresh_session_returns_seed_ids(self, service):
        client, _, _ = service
        sid = _create_session(client)
        body = client.get(f"/sessions/{sid}/query").json()
        assert len(body["ids"]) == 4  # the whole seed batch is pending
        instance = body["instances"][0]
        assert instance["posterior"] is None
        assert {"name", "decoded", "normalized"} <= set(instance["features"][0])
        assert isinstance(instance["lof_score"], float)

    def test_repeated_get_is_idempotent(self, service):
        client, _, _ = service
        sid = _create_session(client)
        a = client.get(f"/sessions/{sid}/query").json()
        b = client.get(f"/sessions/{sid}/query").json()
        assert a == b

    def test_unknown_session_404(self, service):
        client, _, _ = service
        assert client.get("/sessions/nope/query").status_code == 404

    def test_stopped_session_409_with_status(self, service):
        client, _, _ = service
        sid = _create_session(client)
        self._drive_to_stop(client, sid)
        response = client.get(f"/sessions/{sid}/query")
        assert response.status_code == 409
        assert response.json()["status"].startswith("stopped_")

    @staticmethod
    def _drive_to_stop(client, sid):
        for _ in range(200):
            q = client.get(f"/sessions/{sid}/query")
            if q.status_code == 409:
                return
            iid = q.json()["ids"][0]
            # features are decoded; use the normalized f1 value to label blobs
            inst = q.json()["instances"][0]
            norm = {f["name"]: f["normalized"] for f in inst["features"]}
            label = int(norm["f0"] + norm["f1"] > 1.0)
            client.post(f"/sessions/{sid}/label", json={"instance_id": iid, "label": label})
        raise AssertionError("session never stopped")


class TestLabelEndpoint:
    def test_completing_batch_returns_curve_point(self, service):
        client, _, _ = service
        sid = _create_session(client)
        iid = client.get(f"/sessions/{sid}/query").json()["ids"][0]
        response = client.post(
            f"/sessions/{sid}/label", json={"instance_id": iid, "label": 1}
        )
        assert response.status_code == 200
        body = response.json()
        # batch size 1 but the seed phase has 4 ids pending
        assert body["pending_remaining"] == 3
        assert body["point"] is None

    def test_duplicate_label_409_state_unchanged(self, service):
        client, _, _ = service
        sid = _create_session(client)
        iid = client.get(f"/sessions/{sid}/query").json()["ids"][0]
        first = client.post(f"/sessions/{sid}/label", json={"instance_id": iid, "label": 1})
        assert first.status_code == 200
        before = client.get(f"/sessions/{sid}/metrics").json()
        second = client.post(f"/sessions/{sid}/label", json={"instance_id": iid, "label": 1})
        assert second.status_code == 409
        assert client.get(f"/sessions/{sid}/metrics").json() == before

    def test_label_out_of_range_400(self, service):
        client, _, _ = service
        sid = _create_session(client)
        iid = client.get(f"/sessions/{sid}/query").json()["ids"][0]
        response = client.post(f"/sessions/{sid}/label", json={"instance_id": iid, "label": 3})
        assert response.status_code == 400

    def test_non_pending_id_409(self, service):
        client, _, _ = service
        sid = _create_session(client)
        pending = set(client.get(f"/sessions/{sid}/query").json()["ids"])
        outside = max(pending) + 1 if max(pending) < 119 else min(pending) - 1
        response = client.post(
            f"/sessions/{sid}/label", json={"instance_id": int(outside), "label": 0}
        )
        assert response.status_code == 409


class TestCurveAndMetrics:
    def test_empty_curve_before_first_retrain(self, service):
        client, _, _ = service
        sid = _create_session(client)
        assert client.get(f"/sessions/{sid}/curve").json() == {"curve": []}
        metrics = client.get(f"/sessions/{sid}/metrics").json()
        assert metrics["status"] == "awaiting_label"
        assert metrics["latest"] is None

    def test_curve_grows_per_retrain_round(self, service):
        client, _, _ = service
        sid = _create_session(client)
        # finish the 4-label seed batch -> one retrain
        for _ in range(4):
            iid = client.get(f"/sessions/{sid}/query").json()["ids"][0]
            client.post(f"/sessions/{sid}/label", json={"instance_id": iid, "label": 0})
        curve = client.get(f"/sessions/{sid}/curve").json()["curve"]
        assert len(curve) == 1
        assert curve[0]["labels_used"] == 4

    def test_metrics_carry_stop_rule(self, service):
        client, _, _ = service
        sid = _create_session(client)
        metrics = client.get(f"/sessions/{sid}/metrics").json()
        assert metrics["stop_rule"]["precision_min"] == 0.9
        assert metrics["stop_rule"]["label_budget"] == 60


class TestApiOracleEquivalence:
    def test_api_driven_curve_matches_run_with_oracle(self, service):
        client, data_dir, _ = service
        sid = _create_session(client)

        ds = blobs_dataset(150, seed=5)
        train, test = split(ds, 0.8, seed=2)
        config = SessionConfig(
            strategy=QueryStrategy(kind="uncertainty"),
            boost=BoostConfig(rounds=8),
            stop=StopRule(precision_min=0.9, recall_min=0.9, label_budget=60, max_rounds=1000),
            seeding="lof",
            seed_count=4,
            batch_size=1,
            seed=21,
        )
        reference = run_with_oracle(init_session(train, test, config))

        truth = {int(i): int(l) for i, l in zip(train.ids, train.labels)}
        while True:
            q = client.get(f"/sessions/{sid}/query")
            if q.status_code == 409:
                break
            for iid in q.json()["ids"]:
                r = client.post(
                    f"/sessions/{sid}/label",
                    json={"instance_id": iid, "label": truth[iid]},
                )
                assert r.status_code == 200
        api_curve = client.get(f"/sessions/{sid}/curve").json()["curve"]
        ref_curve = [pt.to_dict() for pt in reference.curve]
        assert api_curve == ref_curve
        assert client.get(f"/sessions/{sid}/metrics").json()["status"] == reference.status.value


class TestConcurrency:
    def test_concurrent_labels_for_one_id_serialize_to_one_winner(self, service):
        import threading

        client, _, _ = service
        sid = _create_session(client)
        iid = client.get(f"/sessions/{sid}/query").json()["ids"][0]
        codes = []
        lock = threading.Lock()

        def submit():
            r = client.post(f"/sessions/{sid}/label", json={"instance_id": iid, "label": 1})
            with lock:
                codes.append(r.status_code)

        threads = [threading.Thread(target=submit) for _ in range(6)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(codes) == [200] + [409] * 5


class TestPersistence:
    def test_snapshots_written_after_mutations(self, service):
        client, _, snapshot_dir = service
        sid = _create_session(client)
        assert (snapshot_dir / f"{sid}.json").exists()

    def test_restarted_server_resumes_pending_session(self, tmp_path):
        data_dir = tmp_path / "data"
        snapshot_dir = tmp_path / "snaps"
        data_dir.mkdir()
        _register_dataset(data_dir)

        with TestClient(create_app(data_dir, snapshot_dir)) as client:
            sid = _create_session(client)
            pending = client.get(f"/sessions/{sid}/query").json()["ids"]
            client.post(
                f"/sessions/{sid}/label",
                json={"instance_id": pending[0], "label": 1},
            )
            expected = client.get(f"/sessions/{sid}/query").json()

        with TestClient(create_app(data_dir, snapshot_dir)) as revived:
            got = revived.get(f"/sessions/{sid}/query").json()
            assert got == expected
