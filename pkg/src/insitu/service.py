"""Engine facade plus the /v1 HTTP API used by the browser overlay.

The engine is stateless with respect to page mutations: it only hands out
plans and reversal metadata; applying and undoing them is entirely the
client's job. Per-interface builds and handbook writes are serialized;
read paths run concurrently.
"""

from __future__ import annotations

import threading
import time
import uuid
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from .config import EngineConfig
from .delivery import compile_plan, plan_to_dict
from .dom_model import DomSnapshot, extract_interactables, parse_snapshot
from .errors import (
    BuildFailed,
    CompileError,
    EmptyElements,
    GraphError,
    InsituError,
    InterfaceNotReady,
    NoAssistanceAvailable,
    NotFound,
    SchemaError,
    UngroundedTarget,
    UnknownCaseId,
    UnknownElementIndex,
    UnresolvedTarget,
)
from .grounding import ElementEmbeddingCache, GroundingConfig, ground_case
from .handbook import (
    AssistanceCase,
    HandbookIndex,
    HandbookStore,
    UiTarget,
    generate_handbook,
)
from .knowledge import (
    InterfaceKnowledge,
    KnowledgeStore,
    acquire_knowledge,
    interface_id_for,
)
from .providers import ProviderSet, build_provider_set
from .recommender import RecommenderConfig, recommend, user_element_hint


@dataclass
class Session:
    session_id: str
    interface_id: str
    snapshot_digest: str = ""
    delivered_plans: dict[str, dict] = field(default_factory=dict)
    created_at: str = ""


@dataclass
class InterfaceState:
    interface_id: str
    status: str  # building | ready | degraded | failed
    job_id: str
    knowledge: InterfaceKnowledge | None = None
    index: HandbookIndex | None = None
    failure: str = ""


def _case_to_dict(case: AssistanceCase) -> dict:
    return {
        "case_id": case.case_id,
        "assistance": case.assistance,
        "rationale": case.rationale,
        "subtype": case.subtype,
        "targets": [{"ui_description": t.ui_description} for t in case.targets],
        "configuration": case.configuration,
        "category": case.category,
        "feedback": case.feedback,
        "origin": case.origin,
    }


class Engine:
    def __init__(self, cfg: EngineConfig, providers: ProviderSet | None = None):
        self.cfg = cfg
        self.providers = providers or build_provider_set(cfg.providers)
        self.knowledge_store = KnowledgeStore(cfg.data_dir)
        self.handbook_store = HandbookStore(cfg.data_dir)
        self.grounding_cfg = GroundingConfig(sigma_min=cfg.sigma_min)
        self.element_cache = ElementEmbeddingCache(self.providers.embedder)
        self._interfaces: dict[str, InterfaceState] = {}
        self._sessions: dict[str, Session] = {}
        self._state_lock = threading.Lock()
        self._iface_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)

    # -- interface lifecycle ------------------------------------------------

    def init_interface(
        self, url: str, title: str, snapshot: DomSnapshot | dict | str,
        background: bool = True,
    ) -> tuple[str, str]:
        """Start (or reuse) the one-time knowledge + handbook build."""
        if not isinstance(snapshot, DomSnapshot):
            snapshot = parse_snapshot(snapshot)
        interface_id = interface_id_for(url)
        with self._state_lock:
            state = self._interfaces.get(interface_id)
            if state is not None and state.status != "failed":
                return state.job_id, interface_id
            if state is None and self.knowledge_store.exists(interface_id) \
                    and self.handbook_store.exists(interface_id):
                # Reuse: zero provider calls for an already-built interface.
                knowledge = self.knowledge_store.load(interface_id)
                index = self.handbook_store.load(interface_id)
                state = InterfaceState(
                    interface_id=interface_id,
                    status="degraded" if knowledge.degraded else "ready",
                    job_id=f"job-{uuid.uuid4().hex[:8]}",
                    knowledge=knowledge,
                    index=index,
                )
                self._interfaces[interface_id] = state
                return state.job_id, interface_id
            job_id = f"job-{uuid.uuid4().hex[:8]}"
            state = InterfaceState(interface_id=interface_id, status="building",
                                   job_id=job_id)
            self._interfaces[interface_id] = state
        if background:
            threading.Thread(
                target=self._build, args=(state, url, title, snapshot), daemon=True
            ).start()
        else:
            self._build(state, url, title, snapshot)
        return state.job_id, interface_id

    def _build(self, state: InterfaceState, url: str, title: str,
               snapshot: DomSnapshot) -> None:
        with self._iface_locks[state.interface_id]:
            try:
                knowledge = acquire_knowledge(url, title, snapshot,
                                              self.providers, self.cfg)
                elements = extract_interactables(snapshot)
                build = generate_handbook(
                    knowledge, elements, self.cfg.handbook_size, self.providers
                )
                index = HandbookIndex.build(build.cases, self.providers.embedder)
                self.knowledge_store.store(knowledge)
                self.handbook_store.save(state.interface_id, index)
            except InsituError as e:
                state.failure = str(e)
                state.status = "failed"
                return
            state.knowledge = knowledge
            state.index = index
            state.status = "degraded" if knowledge.degraded else "ready"

    def wait_for_build(self, interface_id: str, timeout: float = 60.0) -> str:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            status = self.interface_status(interface_id)["status"]
            if status != "building":
                return status
            time.sleep(0.01)
        raise BuildFailed(f"build for {interface_id} timed out after {timeout}s")

    def interface_status(self, interface_id: str) -> dict:
        state = self._interfaces.get(interface_id)
        if state is None:
            if self.knowledge_store.exists(interface_id) \
                    and self.handbook_store.exists(interface_id):
                knowledge = self.knowledge_store.load(interface_id)
                index = self.handbook_store.load(interface_id)
                state = InterfaceState(
                    interface_id=interface_id,
                    status="degraded" if knowledge.degraded else "ready",
                    job_id=f"job-{uuid.uuid4().hex[:8]}",
                    knowledge=knowledge,
                    index=index,
                )
                with self._state_lock:
                    self._interfaces.setdefault(interface_id, state)
            else:
                raise NotFound(f"unknown interface {interface_id}")
        return {
            "status": state.status,
            "handbook_size": len(state.index) if state.index is not None else 0,
            "degraded": state.knowledge.degraded if state.knowledge else False,
            "failure": state.failure,
        }

    def _ready_state(self, interface_id: str) -> InterfaceState:
        self.interface_status(interface_id)  # loads from store if needed
        state = self._interfaces.get(interface_id)
        if state is None:
            raise NotFound(f"unknown interface {interface_id}")
        if state.status == "building":
            raise InterfaceNotReady(f"interface {interface_id} is still building")
        if state.status == "failed":
            raise InterfaceNotReady(f"interface {interface_id} build failed: {state.failure}")
        return state

    # -- assistance ---------------------------------------------------------

    def assist(
        self,
        interface_id: str,
        challenge: str,
        snapshot: DomSnapshot | dict | str,
        selected_elements: list[int] | None = None,
        session_id: str | None = None,
        method: str = "hybrid",
    ) -> dict:
        t_start = time.monotonic()
        state = self._ready_state(interface_id)
        assert state.index is not None and state.knowledge is not None
        if not isinstance(snapshot, DomSnapshot):
            snapshot = parse_snapshot(snapshot)
        elements = extract_interactables(snapshot)
        query = user_element_hint(challenge, selected_elements or [], elements)

        rec_cfg = RecommenderConfig(k=self.cfg.k, tau=self.cfg.tau, method=method)
        rec = recommend(query, snapshot, state.index, state.knowledge,
                        rec_cfg, self.providers)

        t_ground = time.monotonic()
        pool: list[tuple[AssistanceCase, float | None]] = list(rec.candidates)
        if method != "generate_only":
            seen = {case.case_id for case, _ in pool}
            for case, score in state.index.retrieve(
                query, max(len(state.index), 1), self.providers.embedder
            ):
                if case.case_id not in seen:
                    pool.append((case, score))
        delivered = []
        diagnostics = []
        for case, score in pool:
            if len(delivered) >= self.cfg.k:
                break
            try:
                grounded = ground_case(case, elements, self.grounding_cfg,
                                       self.providers.embedder, self.element_cache)
                plan = compile_plan(case, grounded, snapshot)
            except (UnresolvedTarget, UngroundedTarget, CompileError, EmptyElements) as e:
                diagnostics.append({"case_id": case.case_id, "error": str(e)})
                continue
            delivered.append({
                "case": _case_to_dict(case),
                "plan": plan_to_dict(plan),
                "score": score,
                "path": "generated" if (rec.path == "generated" and score is None)
                        else "retrieved",
            })
        timings = dict(rec.timings)
        timings["grounding"] = (time.monotonic() - t_ground) * 1000.0
        if not delivered:
            raise NoAssistanceAvailable(
                f"no candidate survived grounding/compilation: {diagnostics}"
            )
        if rec.path == "generated" and method == "hybrid":
            with self._iface_locks[interface_id]:
                self.handbook_store.save(interface_id, state.index)

        session = self._session(session_id, interface_id)
        for item in delivered:
            session.delivered_plans[item["plan"]["plan_id"]] = {
                "case_id": item["case"]["case_id"],
                "subtype": item["case"]["subtype"],
            }
        timings["total"] = (time.monotonic() - t_start) * 1000.0
        return {
            "session_id": session.session_id,
            "candidates": delivered,
            "timings": timings,
            "path": rec.path,
            "generation_calls": rec.generation_calls,
            "diagnostics": diagnostics,
        }

    def _session(self, session_id: str | None, interface_id: str) -> Session:
        with self._state_lock:
            if session_id and session_id in self._sessions:
                return self._sessions[session_id]
            session = Session(
                session_id=session_id or f"s-{uuid.uuid4().hex[:12]}",
                interface_id=interface_id,
                created_at=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
            )
            self._sessions[session.session_id] = session
            return session

    def feedback(self, case_id: str, rating: int) -> int:
        if rating not in (-1, 1):
            raise SchemaError("rating must be -1 or +1")
        for interface_id, state in list(self._interfaces.items()):
            if state.index is None:
                continue
            try:
                with self._iface_locks[interface_id]:
                    tally = state.index.record_feedback(case_id, rating)
                    self.handbook_store.save(interface_id, state.index)
                return tally
            except UnknownCaseId:
                continue
        raise UnknownCaseId(case_id)

    def export_handbook(self, interface_id: str) -> str:
        from .handbook import index_to_canonical_json

        state = self._ready_state(interface_id)
        assert state.index is not None
        return index_to_canonical_json(state.index)


# ---------------------------------------------------------------------------
# HTTP layer


def create_app(engine: Engine):
    app = FastAPI(title="insitu", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def error_response(e: Exception) -> JSONResponse:
        if isinstance(e, (NotFound, UnknownCaseId)):
            code = 404
        elif isinstance(e, InterfaceNotReady):
            code = 409
        elif isinstance(e, NoAssistanceAvailable):
            code = 422
        elif isinstance(e, (SchemaError, GraphError, UnknownElementIndex, ValueError)):
            code = 400
        else:
            code = 500
        return JSONResponse(
            status_code=code, content={"error": type(e).__name__, "detail": str(e)}
        )

    @app.exception_handler(InsituError)
    async def handle_insitu_error(request: Request, exc: InsituError):
        return error_response(exc)

    @app.exception_handler(ValueError)
    async def handle_value_error(request: Request, exc: ValueError):
        return error_response(exc)

    @app.post("/v1/interfaces", status_code=202)
    async def init_interface(request: Request):
        body = await request.json()
        for k in ("url", "title", "snapshot"):
            if k not in body:
                raise SchemaError(f"missing field {k}")
        job_id, interface_id = engine.init_interface(
            body["url"], body["title"], body["snapshot"]
        )
        return {"job_id": job_id, "interface_id": interface_id}

    @app.get("/v1/interfaces/{interface_id}")
    async def interface_status(interface_id: str):
        return engine.interface_status(interface_id)

    @app.post("/v1/assist")
    async def assist(request: Request):
        body = await request.json()
        for k in ("interface_id", "challenge", "snapshot"):
            if k not in body:
                raise SchemaError(f"missing field {k}")
        return engine.assist(
            interface_id=body["interface_id"],
            challenge=body["challenge"],
            snapshot=body["snapshot"],
            selected_elements=body.get("selected_elements"),
            session_id=body.get("session_id"),
            method=body.get("method", "hybrid"),
        )

    @app.post("/v1/feedback")
    async def feedback(request: Request):
        body = await request.json()
        for k in ("case_id", "rating"):
            if k not in body:
                raise SchemaError(f"missing field {k}")
        tally = engine.feedback(body["case_id"], body["rating"])
        return {"ok": True, "feedback": tally}

    @app.get("/v1/interfaces/{interface_id}/handbook")
    async def export_handbook(interface_id: str):
        return Response(
            content=engine.export_handbook(interface_id),
            media_type="application/json",
        )

    return app
