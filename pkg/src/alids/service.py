"""HTTP facade over the session state machine for human labelers.

One service hosts many sessions; per-session mutations are serialized with
a lock, and every state change is snapshotted to disk so a restarted server
resumes pending work. Datasets are pre-registered on the server as
directories produced by ``alids prepare``.
"""

from __future__ import annotations

import json
import threading
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .dataset import decode_features, load_dataset
from .errors import AlidsError, ConfigError, LabelRejected, SessionError, SnapshotError
from .session import (
    Session,
    SessionConfig,
    init_session,
    restore,
    snapshot,
)


@dataclass
class ApiSession:
    session: Session
    lock: threading.Lock
    created_at: str


def _curve_payload(session: Session) -> list[dict]:
    return [pt.to_dict() for pt in session.curve]


def _metrics_payload(session: Session) -> dict:
    latest = session.curve[-1].to_dict() if session.curve else None
    return {
        "status": session.status.value,
        "labels_used": session.labels_used,
        "round": session.round,
        "pool_size": len(session.pool),
        "latest": latest,
        "stop_rule": {
            "precision_min": session.config.stop.precision_min,
            "recall_min": session.config.stop.recall_min,
            "label_budget": session.config.stop.label_budget,
            "max_rounds": session.config.stop.max_rounds,
        },
        "strategy": session.config.strategy.kind,
    }


def create_app(
    data_dir: Path | str,
    snapshot_dir: Path | str,
    frontend_dir: str | None = None,
) -> FastAPI:
    data_dir = Path(data_dir)
    snapshot_dir = Path(snapshot_dir)
    snapshot_dir.mkdir(parents=True, exist_ok=True)

    sessions: dict[str, ApiSession] = {}
    registry_lock = threading.Lock()

    @asynccontextmanager
    async def _lifespan(app: FastAPI):
        yield
        with registry_lock:
            for sid, api in sessions.items():
                try:
                    _persist(sid, api)
                except AlidsError:
                    continue

    app = FastAPI(title="alids labeling service", lifespan=_lifespan)

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        details = [str(e.get("msg", e)) for e in exc.errors()]
        return JSONResponse(status_code=400, content={"errors": details})

    def _persist(sid: str, api: ApiSession) -> None:
        target = snapshot_dir / f"{sid}.json"
        tmp = target.with_suffix(".tmp")
        tmp.write_bytes(snapshot(api.session))
        tmp.replace(target)

    def _load_snapshots() -> None:
        for path in sorted(snapshot_dir.glob("*.json")):
            try:
                session = restore(path.read_bytes())
            except SnapshotError:
                continue  # leave corrupt files in place for inspection
            sessions[path.stem] = ApiSession(
                session=session, lock=threading.Lock(), created_at=""
            )

    _load_snapshots()

    def _get(sid: str) -> ApiSession | None:
        with registry_lock:
            return sessions.get(sid)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(sessions)}

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict):
        name = payload.get("dataset")
        if not isinstance(name, str) or not name:
            return JSONResponse(
                status_code=400, content={"errors": ["missing 'dataset' name"]}
            )
        prepared = data_dir / name
        if not (prepared / "dataset.json").exists():
            return JSONResponse(
                status_code=404, content={"errors": [f"unknown dataset {name!r}"]}
            )
        try:
            config = SessionConfig.from_dict(payload.get("config", {}))
        except (ConfigError, TypeError) as exc:
            return JSONResponse(status_code=400, content={"errors": [str(exc)]})

        ds = load_dataset(prepared / "dataset.json")
        manifest = json.loads((prepared / "manifest.json").read_text())
        pos = {int(i): p for p, i in enumerate(ds.ids.tolist())}
        train_ds = ds.subset(np.asarray([pos[i] for i in manifest["train_ids"]]))
        test_ds = ds.subset(np.asarray([pos[i] for i in manifest["test_ids"]]))
        try:
            session = init_session(train_ds, test_ds, config)
        except ConfigError as exc:
            return JSONResponse(status_code=400, content={"errors": [str(exc)]})

        sid = uuid.uuid4().hex
        api = ApiSession(
            session=session, lock=threading.Lock(), created_at=name
        )
        with registry_lock:
            sessions[sid] = api
        _persist(sid, api)
        return {"session_id": sid}

    @app.get("/sessions/{sid}/query")
    def get_query(sid: str):
        api = _get(sid)
        if api is None:
            return JSONResponse(status_code=404, content={"errors": ["unknown session"]})
        with api.lock:
            if not api.session.active:
                return JSONResponse(
                    status_code=409, content={"status": api.session.status.value}
                )
            request = api.session.next_query()
            if request is None:
                _persist(sid, api)
                return JSONResponse(
                    status_code=409, content={"status": api.session.status.value}
                )
            _persist(sid, api)
            instances = []
            for row, instance_id in enumerate(request.ids):
                instances.append(
                    {
                        "id": instance_id,
                        "features": decode_features(
                            api.session.train_ds, request.features[row]
                        ),
                        "posterior": None
                        if request.posteriors is None
                        else request.posteriors[row],
                        "lof_score": request.lof_scores[row],
                    }
                )
            return {
                "strategy": request.strategy,
                "ids": request.ids,
                "instances": instances,
            }

    @app.post("/sessions/{sid}/label")
    def post_label(sid: str, payload: dict):
        api = _get(sid)
        if api is None:
            return JSONResponse(status_code=404, content={"errors": ["unknown session"]})
        instance_id = payload.get("instance_id")
        label = payload.get("label")
        if not isinstance(instance_id, int) or isinstance(instance_id, bool):
            return JSONResponse(
                status_code=400, content={"errors": ["instance_id must be an integer"]}
            )
        if label not in (0, 1):
            return JSONResponse(
                status_code=400, content={"errors": ["label must be 0 or 1"]}
            )
        with api.lock:
            try:
                update = api.session.submit_label(instance_id, label)
            except LabelRejected as exc:
                return JSONResponse(status_code=409, content={"errors": [str(exc)]})
            except SessionError as exc:
                return JSONResponse(status_code=409, content={"errors": [str(exc)]})
            _persist(sid, api)
            return {
                "status": update.status.value,
                "pending_remaining": update.pending_remaining,
                "disagreement": update.disagreement,
                "point": None if update.point is None else update.point.to_dict(),
            }

    @app.get("/sessions/{sid}/curve")
    def get_curve(sid: str):
        api = _get(sid)
        if api is None:
            return JSONResponse(status_code=404, content={"errors": ["unknown session"]})
        with api.lock:
            return {"curve": _curve_payload(api.session)}

    @app.get("/sessions/{sid}/metrics")
    def get_metrics(sid: str):
        api = _get(sid)
        if api is None:
            return JSONResponse(status_code=404, content={"errors": ["unknown session"]})
        with api.lock:
            return _metrics_payload(api.session)

    if frontend_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="console")

    return app
