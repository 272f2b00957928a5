"""HTTP front end for the leaderboard.

Endpoints::

    POST   /api/submissions        multipart: model_name, visibility, files=<slug>.trec ...
    GET    /api/submissions/{id}   status, validation problems, scores
    DELETE /api/submissions/{id}   owner withdraws a submission
    GET    /api/leaderboard        public scored entries, best first
    GET    /api/datasets           the dataset registry

Requests authenticate with ``Authorization: Bearer <token>``; tokens map to
user names in the config file.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import threading
import uuid
from contextlib import asynccontextmanager
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Header, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse

from zsir.data import QrelSet, load_qrels, parse_run, write_run
from zsir.errors import DataError
from zsir.leaderboard import protocol as P
from zsir.registry import DatasetSpec, registry as default_registry

log = logging.getLogger(__name__)


@dataclass
class ServiceConfig:
    data_dir: str = "leaderboard-data"
    qrels_dir: str = "qrels"
    host: str = "127.0.0.1"
    port: int = 8000
    rate_limit_hours: float = 24.0
    min_depth: int = 10
    max_depth: int = 100
    workers: int = 2
    tokens: dict[str, str] = field(default_factory=dict)
    registry_path: str | None = None

    ENV = {"ZSIR_DATA_DIR": "data_dir", "ZSIR_QRELS_DIR": "qrels_dir",
           "ZSIR_RATE_LIMIT_HOURS": "rate_limit_hours", "ZSIR_REGISTRY": "registry_path",
           "ZSIR_MIN_DEPTH": "min_depth", "ZSIR_MAX_DEPTH": "max_depth"}

    @classmethod
    def load(cls, path: str | os.PathLike | None = None, env: dict | None = None) -> "ServiceConfig":
        """Read a JSON config file, then apply ``ZSIR_*`` environment overrides.

        ``ZSIR_BIND=host:port`` overrides the bind address.
        """
        raw = json.loads(Path(path).read_text(encoding="utf-8")) if path else {}
        cfg = cls(**raw)
        env = os.environ if env is None else env
        for var, attr in cls.ENV.items():
            if var in env:
                typ = type(getattr(cfg, attr))
                setattr(cfg, attr, typ(env[var]) if typ in (int, float) else env[var])
        if "ZSIR_BIND" in env:
            host, _, port = env["ZSIR_BIND"].rpartition(":")
            cfg.host, cfg.port = host or cfg.host, int(port)
        return cfg

    def registry(self) -> list[DatasetSpec]:
        if not self.registry_path:
            return default_registry()
        rows = json.loads(Path(self.registry_path).read_text(encoding="utf-8"))
        return [DatasetSpec(**r) for r in rows]


def load_qrels_store(qrels_dir: str | os.PathLike, specs: list[DatasetSpec]) -> dict[str, QrelSet]:
    """Load ``<qrels_dir>/<slug>.{tsv,txt,qrels}`` for every dataset."""
    store, missing = {}, []
    for s in specs:
        for ext in (".tsv", ".txt", ".qrels"):
            p = Path(qrels_dir) / f"{s.slug}{ext}"
            if p.exists():
                store[s.slug] = load_qrels(p)
                break
        else:
            missing.append(s.slug)
    if missing:
        raise DataError(f"{qrels_dir}: no qrels for {', '.join(missing)}")
    return store


class LeaderboardService:
    """Protocol state behind the HTTP layer; usable directly in tests."""

    def __init__(self, config: ServiceConfig, qrels: dict[str, QrelSet] | None = None,
                 clock: Callable[[], datetime] = P.utcnow):
        self.config = config
        self.specs = config.registry()
        self.qrels = qrels if qrels is not None else load_qrels_store(config.qrels_dir, self.specs)
        self.clock = clock
        self.root = Path(config.data_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self.journal = P.Journal(self.root / "journal.jsonl")
        self.snapshot_path = self.root / "board.json"
        self.state = self.journal.replay()
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max(1, config.workers), thread_name_prefix="score")
        self._futures: dict[str, Future] = {}
        self._publish()
        for sub in list(self.state.values()):
            if sub.status == "pending":
                self._enqueue(sub.id)

    def _record(self, event: dict) -> None:
        # caller holds self._lock; the snapshot is rewritten in the same
        # critical section so a status change and the board never disagree
        self.journal.append(event)
        P.apply_event(self.state, event)
        if event["type"] in ("scored", "withdrawn"):
            self._publish_locked()

    def _publish_locked(self) -> None:
        P.write_snapshot(self.snapshot_path, P.board(self.state.values()))

    def _publish(self) -> None:
        with self._lock:
            self._publish_locked()

    def leaderboard(self) -> list[dict]:
        return json.loads(self.snapshot_path.read_text(encoding="utf-8"))

    def submit(self, user: str, model_name: str, runs: dict[str, str], visibility: str = "public"):
        """Returns (http_status, body)."""
        if visibility not in ("public", "private"):
            return 400, {"detail": "visibility must be public or private"}
        now = self.clock()
        report = P.validate_submission(runs, self.specs, self.qrels, None,
                                       self.config.min_depth, self.config.max_depth)
        sid = uuid.uuid4().hex
        run_dir = self.root / "runs" / sid
        if report.ok:
            # runs hit the disk before the journal names them
            run_dir.mkdir(parents=True, exist_ok=True)
            for slug, run in report.runs.items():
                write_run(run, run_dir / f"{slug}.trec", check_scores=False)
        with self._lock:
            decision = P.check_rate_limit(user, now, self.state.values(),
                                          timedelta(hours=self.config.rate_limit_hours))
            if not decision.allowed:
                shutil.rmtree(run_dir, ignore_errors=True)
                secs = int(decision.retry_after.total_seconds())
                return 429, {"detail": "rate limited", "retry_after": secs}
            self._record({"type": "created", "id": sid, "user": user, "model_name": model_name,
                          "created_at": P._ts(now), "visibility": visibility})
            if not report.ok:
                self._record({"type": "rejected", "id": sid, "problems": report.summary()})
                return 400, {"id": sid, "status": "rejected", "problems": report.summary()}
        self._enqueue(sid)
        return 202, {"id": sid, "status": "pending", "self_hits_removed": report.self_hits_removed}

    def _enqueue(self, sid: str) -> None:
        with self._lock:
            if sid in self._futures and not self._futures[sid].done():
                return
            self._futures[sid] = self._pool.submit(self._score, sid)

    def _score(self, sid: str) -> None:
        sub = self.state[sid]
        try:
            run_dir = self.root / "runs" / sid
            runs = {}
            for spec in self.specs:
                with open(run_dir / f"{spec.slug}.trec", encoding="utf-8") as f:
                    runs[spec.slug] = parse_run(f, spec.slug)
            entry = P.score_submission(runs, self.qrels, self.specs, submission_id=sid,
                                       model_name=sub.model_name, user=sub.user,
                                       submitted_at=P._ts(sub.created_at))
            event = {"type": "scored", "id": sid, "entry": asdict(entry)}
        except Exception as e:  # submission stays pending with a diagnostic
            log.exception("scoring %s failed", sid)
            event = {"type": "failed", "id": sid, "diagnostic": f"{type(e).__name__}: {e}"}
        with self._lock:
            self._record(event)

    def get(self, sid: str):
        with self._lock:
            sub = self.state.get(sid)
            return None if sub is None else sub.public_view()

    def withdraw(self, sid: str, user: str) -> int:
        with self._lock:
            sub = self.state.get(sid)
            if sub is None:
                return 404
            if sub.user != user:
                return 403
            if not sub.withdrawn:
                self._record({"type": "withdrawn", "id": sid})
        return 200

    def drain(self, timeout: float | None = None) -> None:
        """Block until queued scoring jobs finish."""
        for f in list(self._futures.values()):
            f.result(timeout)

    def close(self) -> None:
        self._pool.shutdown(wait=True)


def create_app(config: ServiceConfig, service: LeaderboardService | None = None) -> FastAPI:
    svc = service or LeaderboardService(config)

    @asynccontextmanager
    async def lifespan(app):
        yield
        svc.close()

    app = FastAPI(title="zsir leaderboard", lifespan=lifespan)
    app.state.service = svc

    def user_for(authorization: str | None) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(401, "missing bearer token")
        user = svc.config.tokens.get(authorization[7:].strip())
        if user is None:
            raise HTTPException(401, "unknown token")
        return user

    @app.post("/api/submissions")
    async def post_submission(request: Request, authorization: str | None = Header(None)):
        user = user_for(authorization)
        form = await request.form()
        runs: dict[str, str] = {}
        for key, value in form.multi_items():
            if isinstance(value, str):
                continue
            upload: UploadFile = value
            name = (upload.filename or key).split("/")[-1]
            slug = name.split(".")[0] if key in ("files", "file") else key
            try:
                runs[slug] = (await upload.read()).decode("utf-8")
            except UnicodeDecodeError:
                raise HTTPException(400, f"run file for {slug} is not UTF-8")
        status, body = svc.submit(user, str(form.get("model_name", "")) or "unnamed", runs,
                                  str(form.get("visibility", "public")))
        headers = {"Retry-After": str(body["retry_after"])} if status == 429 else None
        return JSONResponse(body, status_code=status, headers=headers)

    @app.get("/api/submissions/{sid}")
    def get_submission(sid: str):
        view = svc.get(sid)
        if view is None:
            raise HTTPException(404, "unknown submission")
        return view

    @app.delete("/api/submissions/{sid}")
    def delete_submission(sid: str, authorization: str | None = Header(None)):
        code = svc.withdraw(sid, user_for(authorization))
        if code == 404:
            raise HTTPException(404, "unknown submission")
        if code == 403:
            raise HTTPException(403, "only the owner may withdraw a submission")
        return {"id": sid, "status": "withdrawn"}

    @app.get("/api/leaderboard")
    def get_board():
        return svc.leaderboard()

    @app.get("/api/datasets")
    def get_datasets():
        return [asdict(s) for s in svc.specs]

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")
