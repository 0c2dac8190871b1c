"""Request/response service plus event push for the companion UI.

All endpoints live under /api/v1. Mutations are serialized through one
lock per service instance; every journal mutation emits exactly one
EventNotification with a strictly increasing seq. Subscribers connect to
the websocket at /api/v1/events?since=<seq> and receive missed events
before live ones.
"""

from __future__ import annotations

import asyncio
import base64
import threading
import time
from dataclasses import replace
from pathlib import Path
from typing import Callable

from fastapi import Body, FastAPI, Query, WebSocket, WebSocketDisconnect

from .compose import (
    SummaryComposition,
    export_composite,
    list_intermediate_results,
    place_capture,
)
from .data import BlobData, pipeline_from_obj
from .engine import ExecutionEngine
from .errors import (
    ChainweaveError,
    DocumentSyntaxError,
    UnknownCapture,
    UnknownSeq,
    UnknownStep,
    UnknownTool,
)
from .graph import (
    CoordinationLink,
    DataFlowSpec,
    DataSourceBinding,
    LinkKind,
    add_data_source,
    add_link,
    graph_to_obj,
    remove_data_source,
    remove_link,
    set_layout,
    set_pipeline,
    validate_graph,
)
from .host import SubprocessToolHost
from .journal import StepStatus, record_to_obj
from .layout import Region, layout_from_obj
from .project import Project, canonical_json, load_input_artifacts, project_to_obj, save_project
from .workflow import validate_workflow, workflow_to_obj

_NOT_FOUND = (UnknownStep, UnknownSeq, UnknownCapture, UnknownTool)


class EventLog:
    """Ordered, lossless event history with monotonically increasing seqs."""

    def __init__(self):
        self._events: list[dict] = []
        self._lock = threading.Lock()

    def append(self, kind: str, payload: dict) -> dict:
        with self._lock:
            event = {"seq": len(self._events) + 1, "kind": kind, "payload": payload}
            self._events.append(event)
            return event

    def since(self, seq: int) -> list[dict]:
        with self._lock:
            return [e for e in self._events if e["seq"] > seq]

    def __len__(self) -> int:
        with self._lock:
            return len(self._events)


class OrchestratorService:
    """Holds the project, the (single) session engine, and the event log."""

    def __init__(
        self,
        project: Project,
        project_path: str | Path | None = None,
        host_factory: Callable[[Project], object] | None = None,
        clock: Callable[[], float] = time.time,
        screen: tuple[int, int] = (1920, 1080),
    ):
        self.project = project
        self.project_path = Path(project_path) if project_path else None
        self.clock = clock
        self.screen = screen
        self.events = EventLog()
        self.engine: ExecutionEngine | None = None
        self.compositions: dict[str, SummaryComposition] = {}
        self._mutate = threading.Lock()
        self._host_factory = host_factory or self._default_host_factory

    def _default_host_factory(self, project: Project):
        base = self.project_path.parent if self.project_path else Path.cwd()
        return SubprocessToolHost(list(project.graph.tools), base_dir=base)

    def _emit(self, kind: str, payload: dict) -> None:
        self.events.append(kind, payload)

    # --- graph mutations ------------------------------------------------------

    def mutate_graph(self, fn) -> None:
        with self._mutate:
            new_graph = fn(self.project.graph)
            self.project = replace(self.project, graph=new_graph)
            if self.engine is not None:
                self.engine.graph = new_graph

    # --- session --------------------------------------------------------------

    def start_session(self) -> ExecutionEngine:
        with self._mutate:
            if self.engine is not None and hasattr(self.engine.host, "shutdown"):
                self.engine.host.shutdown()
            host = self._host_factory(self.project)
            self.engine = ExecutionEngine(
                self.project.workflow,
                self.project.graph,
                host,
                clock=self.clock,
                screen=self.screen,
                on_event=self._emit,
            )
            inputs = {}
            if self.project_path is not None and self.project.graph.data_sources:
                inputs = load_input_artifacts(self.project, self.project_path)
            self.engine.start_session(inputs)
            return self.engine

    def require_engine(self) -> ExecutionEngine:
        if self.engine is None or self.engine.session is None:
            raise UnknownSeq("no active session; start one first")
        return self.engine

    def shutdown(self) -> None:
        if self.engine is not None and hasattr(self.engine.host, "shutdown"):
            self.engine.host.shutdown()


def _error_status(exc: ChainweaveError) -> int:
    return 404 if isinstance(exc, _NOT_FOUND) else 400


def _error_body(exc: ChainweaveError) -> dict:
    body = {"code": exc.code, "message": str(exc)}
    report = getattr(exc, "report", None)
    if report is not None:
        body["findings"] = report.to_json()
    return body


def build_app(service: OrchestratorService) -> FastAPI:
    """Wire the service instance into a FastAPI application."""
    from fastapi.responses import JSONResponse

    app = FastAPI(title="chainweave", docs_url=None, redoc_url=None)
    app.state.service = service

    @app.exception_handler(ChainweaveError)
    async def _chainweave_error(request, exc: ChainweaveError):
        return JSONResponse(status_code=_error_status(exc), content=_error_body(exc))

    # --- read endpoints -------------------------------------------------------

    @app.get("/api/v1/project")
    def get_project():
        return project_to_obj(service.project)

    @app.get("/api/v1/workflow")
    def get_workflow():
        return workflow_to_obj(service.project.workflow)

    @app.get("/api/v1/graph")
    def get_graph():
        return graph_to_obj(service.project.graph)

    @app.get("/api/v1/validation")
    def get_validation():
        report = validate_workflow(service.project.workflow)
        graph_report = validate_graph(service.project.workflow, service.project.graph)
        return {
            "workflow": report.to_json(),
            "graph": graph_report.to_json(),
            "ok": report.ok and graph_report.ok,
        }

    # --- graph mutations --------------------------------------------------------

    @app.post("/api/v1/graph/links")
    def post_link(body: dict = Body(...)):
        data = None
        if body.get("data") is not None:
            data = DataFlowSpec(
                source_channel=str(body["data"]["sourceChannel"]),
                target_channel=str(body["data"]["targetChannel"]),
                pipeline_id=str(body["data"]["pipeline"]),
            )
        try:
            link = CoordinationLink(
                id=str(body["id"]),
                source_tool_id=str(body["source"]),
                target_tool_id=str(body["target"]),
                kind=LinkKind(body["kind"]),
                data=data,
            )
        except (KeyError, ValueError) as exc:
            raise DocumentSyntaxError(f"malformed link body: {exc}") from exc
        service.mutate_graph(lambda g: add_link(g, link))
        return graph_to_obj(service.project.graph)

    @app.delete("/api/v1/graph/links/{link_id}")
    def delete_link(link_id: str):
        service.mutate_graph(lambda g: remove_link(g, link_id))
        return graph_to_obj(service.project.graph)

    @app.put("/api/v1/graph/pipelines/{pipeline_id}")
    def put_pipeline(pipeline_id: str, body: dict = Body(...)):
        pipeline = pipeline_from_obj({"id": pipeline_id, "steps": body.get("steps", [])})
        service.mutate_graph(lambda g: set_pipeline(g, pipeline))
        return graph_to_obj(service.project.graph)

    @app.put("/api/v1/graph/layouts")
    def put_layout(body: dict = Body(...)):
        assignment = layout_from_obj(body)
        service.mutate_graph(lambda g: set_layout(g, assignment))
        return graph_to_obj(service.project.graph)

    @app.post("/api/v1/graph/data-sources")
    def post_data_source(body: dict = Body(...)):
        try:
            binding = DataSourceBinding(
                artifact_id=str(body["id"]),
                tool_id=str(body["tool"]),
                channel=str(body["channel"]),
            )
        except KeyError as exc:
            raise DocumentSyntaxError(f"malformed data source body: {exc}") from exc
        service.mutate_graph(lambda g: add_data_source(g, binding))
        return graph_to_obj(service.project.graph)

    @app.delete("/api/v1/graph/data-sources/{artifact_id}")
    def delete_data_source(artifact_id: str):
        service.mutate_graph(lambda g: remove_data_source(g, artifact_id))
        return graph_to_obj(service.project.graph)

    @app.post("/api/v1/project/save")
    def post_save():
        if service.project_path is None:
            raise DocumentSyntaxError("service has no project path to save to")
        save_project(service.project, service.project_path)
        return {"saved": str(service.project_path)}

    # --- session -------------------------------------------------------------------

    @app.post("/api/v1/session")
    def post_session():
        service.start_session()
        return {"journal": [], "currentSeq": None}

    @app.get("/api/v1/session")
    def get_session():
        engine = service.require_engine()
        session = engine.session
        assert session is not None
        return {
            "currentSeq": session.current_seq,
            "records": [record_to_obj(r) for r in session.journal],
        }

    @app.post("/api/v1/session/enter-step")
    def post_enter_step(body: dict = Body(...)):
        engine = service.require_engine()
        record = engine.enter_step(str(body["step"]))
        return record_to_obj(record)

    @app.post("/api/v1/session/status")
    def post_status(body: dict = Body(...)):
        engine = service.require_engine()
        seq = body.get("seq")
        if seq is None:
            session = engine.session
            assert session is not None
            seq = session.current_seq
        try:
            status = StepStatus(body["status"])
        except (KeyError, ValueError) as exc:
            raise DocumentSyntaxError(f"malformed status body: {exc}") from exc
        record = engine.set_status(int(seq), status)
        return record_to_obj(record)

    @app.post("/api/v1/session/notes")
    def post_note(body: dict = Body(...)):
        engine = service.require_engine()
        note = engine.add_note(str(body.get("text", "")))
        return {"at": note.timestamp, "text": note.text}

    def _image_from_body(body: dict) -> BlobData | None:
        encoded = body.get("imageBase64")
        if encoded is None:
            return None
        return BlobData(
            media_type=str(body.get("mediaType", "image/png")),
            data=base64.b64decode(encoded),
        )

    @app.post("/api/v1/session/captures")
    def post_capture(body: dict = Body(...)):
        engine = service.require_engine()
        capture = engine.add_capture(
            label=str(body.get("label", "")),
            tool_id=body.get("tool"),
            image=_image_from_body(body),
        )
        from .journal import capture_to_obj

        return capture_to_obj(capture)

    @app.post("/api/v1/session/captures/{capture_id}/update")
    def post_capture_update(capture_id: str, body: dict = Body(...)):
        engine = service.require_engine()
        capture = engine.update_capture(
            capture_id, tool_id=body.get("tool"), image=_image_from_body(body)
        )
        from .journal import capture_to_obj

        return capture_to_obj(capture)

    @app.delete("/api/v1/session/captures/{capture_id}")
    def delete_capture(capture_id: str):
        engine = service.require_engine()
        capture = engine.remove_capture(capture_id)
        from .journal import capture_to_obj

        return capture_to_obj(capture)

    @app.get("/api/v1/session/results")
    def get_results(includeDead: bool = Query(default=False)):
        engine = service.require_engine()
        session = engine.session
        assert session is not None
        from .journal import capture_to_obj

        groups = list_intermediate_results(session, include_dead=includeDead)
        return [
            {
                "seq": g.seq,
                "step": g.step_id,
                "captures": [capture_to_obj(c) for c in g.captures],
            }
            for g in groups
        ]

    @app.get("/api/v1/session/artifacts/{artifact_id}")
    def get_artifact(artifact_id: str):
        engine = service.require_engine()
        session = engine.session
        assert session is not None
        from .data import artifact_to_obj

        artifact = session.data_store.get(artifact_id)
        if artifact is None:
            raise UnknownCapture(f"unknown artifact {artifact_id!r}", subject=artifact_id)
        return artifact_to_obj(artifact)

    # --- summary composition -----------------------------------------------------

    @app.post("/api/v1/compositions")
    def post_composition(body: dict = Body(...)):
        comp_id = str(body.get("id") or f"composition-{len(service.compositions) + 1}")
        composition = SummaryComposition(
            id=comp_id,
            canvas=(int(body["canvas"][0]), int(body["canvas"][1])),
            title=str(body.get("title", "")),
        )
        service.compositions[comp_id] = composition
        return {"id": comp_id, "canvas": list(composition.canvas), "title": composition.title}

    @app.post("/api/v1/compositions/{comp_id}/placements")
    def post_placement(comp_id: str, body: dict = Body(...)):
        engine = service.require_engine()
        composition = service.compositions.get(comp_id)
        if composition is None:
            raise UnknownCapture(f"unknown composition {comp_id!r}", subject=comp_id)
        x, y, w, h = (float(v) for v in body["region"])
        session = engine.session
        assert session is not None
        place_capture(composition, session, str(body["capture"]), Region(x, y, w, h))
        return {
            "id": comp_id,
            "placements": [
                {"capture": p.capture_id, "region": [p.region.x, p.region.y, p.region.width, p.region.height], "z": p.z_order}
                for p in composition.placements
            ],
        }

    @app.post("/api/v1/compositions/{comp_id}/export")
    def post_export(comp_id: str):
        engine = service.require_engine()
        composition = service.compositions.get(comp_id)
        if composition is None:
            raise UnknownCapture(f"unknown composition {comp_id!r}", subject=comp_id)
        session = engine.session
        assert session is not None
        blob, manifest = export_composite(composition, session)
        return {"png": base64.b64encode(blob.data).decode("ascii"), "manifest": manifest}

    # --- event push ---------------------------------------------------------------

    @app.websocket("/api/v1/events")
    async def events(websocket: WebSocket, since: int = Query(default=0)):
        await websocket.accept()
        cursor = since
        try:
            while True:
                pending = service.events.since(cursor)
                for event in pending:
                    await websocket.send_json(event)
                    cursor = event["seq"]
                await asyncio.sleep(0.02)
        except WebSocketDisconnect:
            return

    return app


def canonical_graph_bytes(service: OrchestratorService) -> bytes:
    """Canonical serialization of the current graph (used by round-trip tests)."""
    return canonical_json(graph_to_obj(service.project.graph)).encode("utf-8")
