"""Live election-session HTTP service.

Sessions live in memory; every mutation (creation, declaration, applied
grouping) is appended to a line-delimited JSON event log, so restarting
the service on the same data directory replays to identical state. The
forecast is recomputed synchronously on every mutation and stamped with
the session's revision; grouping re-optimization runs as a cancellable
background job that never holds the session lock.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .dataio import dataset_from_dict, dataset_to_dict
from .evaluation import group_profile
from .ga import (
    FitnessEvaluator,
    GaConfig,
    config_from_dict,
    config_to_dict,
    run,
)
from .model import DataError, Dataset, DeclarationState, derive_nonvoters
from .regression import NoDeclaredStationsError, assemble_forecast

SSE_KEEPALIVE_SECONDS = 15.0


class ServiceError(Exception):
    """API failure carrying its HTTP status and error document."""

    def __init__(self, status: int, code: str, message: str, detail=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail

    def document(self) -> dict:
        return {"code": self.code, "message": self.message, "detail": self.detail}


def _digest(doc) -> str:
    payload = json.dumps(doc, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _new_id(prefix: str) -> str:
    return f"{prefix}{uuid.uuid4().hex[:12]}"


@dataclass
class Session:
    id: str
    dataset: Dataset
    grouping: tuple[int, ...]
    declarations: DeclarationState
    revision: int = 0
    forecast_doc: dict | None = None
    active_job_id: str | None = None
    lock: threading.RLock = field(default_factory=threading.RLock)
    subscribers: list = field(default_factory=list)


@dataclass
class OptimizeJob:
    id: str
    session_id: str
    config: GaConfig
    status: str = "queued"
    generation: int = 0
    best_fitness: float | None = None
    labels: tuple[int, ...] | None = None
    error: str | None = None
    cancel: threading.Event = field(default_factory=threading.Event)

    def document(self) -> dict:
        return {
            "job_id": self.id,
            "session_id": self.session_id,
            "status": self.status,
            "generation": self.generation,
            "best_fitness": self.best_fitness,
            "labels": list(self.labels) if self.labels is not None else None,
            "error": self.error,
            "config": config_to_dict(self.config),
        }


class SessionStore:
    """All session and job state, plus the append-only event log."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.data_dir / "events.jsonl"
        self.sessions: dict[str, Session] = {}
        self.jobs: dict[str, OptimizeJob] = {}
        self._registry_lock = threading.Lock()
        self._log_lock = threading.Lock()
        self._replay()

    # -- persistence --------------------------------------------------

    def _append_event(self, doc: dict) -> None:
        with self._log_lock:
            with self.log_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(doc, sort_keys=True) + "\n")
                fh.flush()

    def _replay(self) -> None:
        if not self.log_path.exists():
            return
        for line in self.log_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            event = json.loads(line)
            kind = event["event"]
            if kind == "session_created":
                dataset = dataset_from_dict(event["dataset"])
                self.sessions[event["session_id"]] = Session(
                    id=event["session_id"],
                    dataset=dataset,
                    grouping=(0,) * dataset.n_stations,
                    declarations=DeclarationState(declared=frozenset(), votes={}),
                )
            elif kind == "declared":
                session = self.sessions[event["session_id"]]
                st = session.dataset.constituencies[
                    session.dataset.station_index[event["station_id"]]
                ]
                votes = derive_nonvoters(tuple(event["votes"]), st.electorate_cur)
                session.declarations = session.declarations.with_declaration(
                    event["station_id"], votes
                )
                session.revision += 1
            elif kind == "grouping_applied":
                session = self.sessions[event["session_id"]]
                session.grouping = tuple(int(g) for g in event["labels"])
                session.revision += 1
        for session in self.sessions.values():
            session.forecast_doc = self._compute_forecast(session)

    # -- forecast plumbing --------------------------------------------

    @staticmethod
    def _compute_forecast(session: Session) -> dict | None:
        if not session.declarations.declared:
            return None
        forecast = assemble_forecast(
            session.dataset, session.declarations, session.grouping
        )
        return forecast.to_json_dict()

    def _notify(self, session: Session) -> None:
        payload = {
            "revision": session.revision,
            "forecast_digest": (
                _digest(session.forecast_doc) if session.forecast_doc else None
            ),
        }
        for queue, loop in list(session.subscribers):
            loop.call_soon_threadsafe(queue.put_nowait, payload)

    def subscribe(self, session: Session, loop) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue()
        session.subscribers.append((queue, loop))
        return queue

    def unsubscribe(self, session: Session, queue: asyncio.Queue) -> None:
        session.subscribers = [
            pair for pair in session.subscribers if pair[0] is not queue
        ]

    # -- operations ----------------------------------------------------

    def create_session(self, doc) -> Session:
        try:
            dataset = dataset_from_dict(doc)
        except DataError as exc:
            raise ServiceError(400, "invalid_dataset", str(exc)) from None
        session = Session(
            id=_new_id("s"),
            dataset=dataset,
            grouping=(0,) * dataset.n_stations,
            declarations=DeclarationState(declared=frozenset(), votes={}),
        )
        with self._registry_lock:
            self.sessions[session.id] = session
        self._append_event(
            {
                "event": "session_created",
                "session_id": session.id,
                "dataset": dataset_to_dict(dataset),
            }
        )
        return session

    def get_session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise ServiceError(404, "unknown_session", f"no session {session_id!r}")
        return session

    def declare(self, session_id: str, station_id: str, counted) -> dict:
        session = self.get_session(session_id)
        with session.lock:
            index = session.dataset.station_index.get(station_id)
            if index is None:
                raise ServiceError(
                    404, "unknown_station", f"no station {station_id!r}"
                )
            st = session.dataset.constituencies[index]
            if len(counted) != session.dataset.parties.n_cur - 1:
                raise ServiceError(
                    422,
                    "invalid_votes",
                    f"expected {session.dataset.parties.n_cur - 1} counted "
                    f"parties, got {len(counted)}",
                )
            try:
                votes = derive_nonvoters(tuple(counted), st.electorate_cur)
            except DataError as exc:
                raise ServiceError(422, "invalid_votes", str(exc)) from None
            if station_id in session.declarations.declared:
                if session.declarations.votes[station_id] == votes:
                    return {
                        "revision": session.revision,
                        "declared_count": len(session.declarations.declared),
                        "changed": False,
                    }
                raise ServiceError(
                    409,
                    "conflicting_declaration",
                    f"station {station_id!r} already declared with different votes",
                )
            session.declarations = session.declarations.with_declaration(
                station_id, votes
            )
            session.forecast_doc = self._compute_forecast(session)
            session.revision += 1
            self._append_event(
                {
                    "event": "declared",
                    "session_id": session.id,
                    "station_id": station_id,
                    "votes": list(counted),
                }
            )
            result = {
                "revision": session.revision,
                "declared_count": len(session.declarations.declared),
                "changed": True,
            }
        self._notify(session)
        return result

    def forecast_document(self, session_id: str, metric: str) -> dict:
        if metric not in ("abs", "elec", "vald"):
            raise ServiceError(
                422, "invalid_metric", f"unknown metric {metric!r}"
            )
        session = self.get_session(session_id)
        with session.lock:
            if session.forecast_doc is None:
                raise ServiceError(
                    409, "no_declarations", "no station has declared yet"
                )
            return {
                "revision": session.revision,
                "metric": metric,
                "forecast": session.forecast_doc,
            }

    def groups_document(self, session_id: str) -> dict:
        session = self.get_session(session_id)
        with session.lock:
            election = "cur" if session.dataset.has_full_cur_votes else "ref"
            profile = group_profile(
                session.dataset, session.grouping, election=election
            )
            return {
                "revision": session.revision,
                "election": election,
                "profile": profile.to_json_dict(),
            }

    def session_document(self, session_id: str) -> dict:
        session = self.get_session(session_id)
        with session.lock:
            declared = session.declarations.declared
            return {
                "session_id": session.id,
                "revision": session.revision,
                "cur_parties": list(session.dataset.parties.cur_parties),
                "counted_parties": list(session.dataset.parties.cur_parties[:-1]),
                "n_stations": session.dataset.n_stations,
                "declared_count": len(declared),
                "grouping": list(session.grouping),
                "forecast_digest": (
                    _digest(session.forecast_doc) if session.forecast_doc else None
                ),
                "stations": [
                    {
                        "id": st.id,
                        "name": st.name,
                        "electorate_cur": st.electorate_cur,
                        "declared": st.id in declared,
                    }
                    for st in session.dataset.constituencies
                ],
            }

    # -- optimization jobs ----------------------------------------------

    def start_optimize(self, session_id: str, overrides) -> OptimizeJob:
        session = self.get_session(session_id)
        config = self._merge_config(overrides)
        with session.lock:
            declarations = session.declarations
            grouping = session.grouping
        evaluator = FitnessEvaluator(session.dataset, declarations, config)
        try:
            evaluator.fitness(tuple(grouping))
        except (DataError, NoDeclaredStationsError) as exc:
            raise ServiceError(
                409, "not_ready", f"not enough declarations to optimize: {exc}"
            ) from None

        job = OptimizeJob(id=_new_id("j"), session_id=session_id, config=config)
        with self._registry_lock:
            previous = (
                self.jobs.get(session.active_job_id)
                if session.active_job_id
                else None
            )
            if previous is not None and previous.status in ("queued", "running"):
                previous.cancel.set()
            self.jobs[job.id] = job
            session.active_job_id = job.id

        worker = threading.Thread(
            target=self._run_job,
            args=(job, session.dataset, declarations),
            daemon=True,
        )
        worker.start()
        return job

    @staticmethod
    def _merge_config(overrides) -> GaConfig:
        if not isinstance(overrides, dict):
            raise ServiceError(
                422, "invalid_config", "config overrides must be an object"
            )
        base = config_to_dict(GaConfig())
        unknown = set(overrides) - set(base)
        if unknown:
            raise ServiceError(
                422,
                "invalid_config",
                f"unknown config fields: {sorted(unknown)}",
            )
        try:
            return config_from_dict({**base, **overrides})
        except (DataError, TypeError) as exc:
            raise ServiceError(422, "invalid_config", str(exc)) from None

    def _run_job(
        self,
        job: OptimizeJob,
        dataset: Dataset,
        declarations: DeclarationState,
    ) -> None:
        job.status = "running"

        def progress(generation: int, best_fitness: float) -> None:
            job.generation = generation
            job.best_fitness = best_fitness

        try:
            best, _ = run(
                dataset,
                declarations,
                job.config,
                on_generation=progress,
                should_stop=job.cancel.is_set,
            )
        except Exception as exc:
            job.error = str(exc)
            job.status = "failed"
            return
        if job.cancel.is_set():
            job.error = "superseded by a newer optimization job"
            job.status = "failed"
            return
        job.labels = best.genes
        job.best_fitness = best.fitness
        job.status = "done"

    def get_job(self, job_id: str) -> OptimizeJob:
        job = self.jobs.get(job_id)
        if job is None:
            raise ServiceError(404, "unknown_job", f"no job {job_id!r}")
        return job

    def apply_job(self, session_id: str, job_id: str) -> dict:
        session = self.get_session(session_id)
        job = self.get_job(job_id)
        if job.session_id != session_id:
            raise ServiceError(
                404, "unknown_job", f"no job {job_id!r} for this session"
            )
        if job.status != "done":
            raise ServiceError(
                409,
                "job_not_done",
                f"job {job_id!r} is {job.status}, not done",
                detail=job.error,
            )
        with session.lock:
            session.grouping = tuple(job.labels)
            session.forecast_doc = self._compute_forecast(session)
            session.revision += 1
            self._append_event(
                {
                    "event": "grouping_applied",
                    "session_id": session.id,
                    "job_id": job.id,
                    "labels": list(job.labels),
                }
            )
            result = {
                "revision": session.revision,
                "grouping": list(session.grouping),
            }
        self._notify(session)
        return result


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------


async def _json_body(request: Request, code: str, status: int):
    try:
        return await request.json()
    except Exception:
        raise ServiceError(status, code, "request body must be JSON") from None


def create_app(data_dir: str | Path = "votecast_data") -> FastAPI:
    app = FastAPI(title="votecast live service")
    store = SessionStore(data_dir)
    app.state.store = store

    @app.exception_handler(ServiceError)
    async def service_error(_request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content=exc.document())

    @app.exception_handler(RequestValidationError)
    async def request_error(_request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={
                "code": "invalid_request",
                "message": "request validation failed",
                "detail": str(exc),
            },
        )

    @app.post("/api/sessions", status_code=201)
    async def create_session(request: Request):
        doc = await _json_body(request, "invalid_dataset", 400)
        session = store.create_session(doc)
        return store.session_document(session.id)

    @app.get("/api/sessions/{session_id}")
    async def get_session(session_id: str):
        return store.session_document(session_id)

    @app.post("/api/sessions/{session_id}/declarations")
    async def declare(session_id: str, request: Request):
        body = await _json_body(request, "invalid_request", 422)
        if not isinstance(body, dict) or not isinstance(
            body.get("station_id"), str
        ):
            raise ServiceError(
                422, "invalid_request", "body needs a string 'station_id'"
            )
        votes = body.get("votes")
        if not isinstance(votes, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in votes
        ):
            raise ServiceError(
                422, "invalid_request", "body needs integer 'votes'"
            )
        return store.declare(session_id, body["station_id"], votes)

    @app.get("/api/sessions/{session_id}/forecast")
    async def forecast(session_id: str, metric: str = "abs"):
        return store.forecast_document(session_id, metric)

    @app.get("/api/sessions/{session_id}/groups")
    async def groups(session_id: str):
        return store.groups_document(session_id)

    @app.post("/api/sessions/{session_id}/optimize", status_code=201)
    async def optimize(session_id: str, request: Request):
        body = await _json_body(request, "invalid_config", 422)
        job = store.start_optimize(session_id, body or {})
        return job.document()

    @app.get("/api/jobs/{job_id}")
    async def get_job(job_id: str):
        return store.get_job(job_id).document()

    @app.post("/api/sessions/{session_id}/apply/{job_id}")
    async def apply_job(session_id: str, job_id: str):
        return store.apply_job(session_id, job_id)

    @app.get("/api/sessions/{session_id}/events")
    async def events(session_id: str):
        session = store.get_session(session_id)
        loop = asyncio.get_running_loop()
        queue = store.subscribe(session, loop)

        async def stream():
            try:
                with session.lock:
                    first = {
                        "revision": session.revision,
                        "forecast_digest": (
                            _digest(session.forecast_doc)
                            if session.forecast_doc
                            else None
                        ),
                    }
                yield f"data: {json.dumps(first)}\n\n"
                while True:
                    try:
                        payload = await asyncio.wait_for(
                            queue.get(), timeout=SSE_KEEPALIVE_SECONDS
                        )
                        yield f"data: {json.dumps(payload)}\n\n"
                    except asyncio.TimeoutError:
                        yield ": keep-alive\n\n"
            finally:
                store.unsubscribe(session, queue)

        return StreamingResponse(stream(), media_type="text/event-stream")

    dist = os.environ.get("FRONTEND_DIST") or str(
        Path(__file__).resolve().parents[2] / "frontend" / "dist"
    )
    if Path(dist).is_dir():
        app.mount("/", StaticFiles(directory=dist, html=True), name="console")

    return app
