"""Local HTTP service exposing flowcharts and interactive walk sessions.

The API adds no dialogue semantics of its own: every step defers to the
engine oracle, so UI walks always agree with evaluation.  Sessions live in
memory and expire after the idle timeout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .engine import (
    Session,
    SessionDoneError,
    SessionStore,
    UnknownSessionError,
)
from .graph import DECISION, STATE, StateGraph, build_graph
from .matching import DEFAULT_LEXICON, GuardLexicon, UnmatchedGuardError
from .parser import parse


@dataclass
class ServiceConfig:
    corpus_dir: Path
    bind: str = "127.0.0.1"
    port: int = 8642
    idle_timeout: float = 1800.0
    static_dir: Path | None = None
    lexicon: GuardLexicon = field(default_factory=lambda: DEFAULT_LEXICON)

    def __post_init__(self) -> None:
        self.corpus_dir = Path(self.corpus_dir)
        if not 1 <= self.port <= 65535:
            raise ValueError(f"port {self.port} out of range")
        if not self.corpus_dir.is_dir():
            raise ValueError(f"corpus directory {self.corpus_dir} does not exist")


@dataclass(frozen=True)
class FlowchartEntry:
    id: str
    title: str
    source: str
    graph: StateGraph

    @property
    def node_count(self) -> int:
        return sum(1 for n in self.graph.nodes if n.kind in (STATE, DECISION))


def load_corpus(corpus_dir: Path) -> dict[str, FlowchartEntry]:
    entries: dict[str, FlowchartEntry] = {}
    for path in sorted(corpus_dir.glob("*.puml")):
        source = path.read_text(encoding="utf-8")
        graph = build_graph(parse(source))
        first_states = [n.label for n in graph.nodes if n.kind == STATE]
        entries[path.stem] = FlowchartEntry(
            id=path.stem,
            title=first_states[0] if first_states else path.stem,
            source=source,
            graph=graph,
        )
    return entries


class SessionCreate(BaseModel):
    flowchart_id: str


class StepRequest(BaseModel):
    input: str


def _session_view(session: Session) -> dict:
    return {
        "session_id": session.session_id,
        "flowchart_id": session.flowchart_id,
        "state": session.current_label,
        "kind": session.current_kind,
        "options": session.options(),
        "done": session.done,
        "history": session.history,
    }


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="flowdial walker service")
    flowcharts = load_corpus(config.corpus_dir)
    store = SessionStore(idle_timeout=config.idle_timeout)

    @app.exception_handler(UnmatchedGuardError)
    async def _unmatched(request, exc: UnmatchedGuardError):
        return JSONResponse(
            status_code=422,
            content={"error": "unmatched_guard", "options": exc.options},
        )

    @app.exception_handler(UnknownSessionError)
    async def _unknown_session(request, exc: UnknownSessionError):
        return JSONResponse(status_code=404, content={"error": "unknown_session"})

    @app.exception_handler(SessionDoneError)
    async def _done(request, exc: SessionDoneError):
        return JSONResponse(status_code=409, content={"error": "session_done"})

    @app.get("/api/flowcharts")
    def list_flowcharts():
        return [
            {"id": e.id, "title": e.title, "node_count": e.node_count}
            for e in flowcharts.values()
        ]

    @app.get("/api/flowcharts/{flowchart_id}")
    def get_flowchart(flowchart_id: str):
        entry = flowcharts.get(flowchart_id)
        if entry is None:
            return JSONResponse(
                status_code=404, content={"error": "unknown_flowchart"}
            )
        return {
            "id": entry.id,
            "title": entry.title,
            "plantuml": entry.source,
            "graph": entry.graph.to_json_dict(),
        }

    @app.post("/api/sessions")
    def create_session(body: SessionCreate):
        entry = flowcharts.get(body.flowchart_id)
        if entry is None:
            return JSONResponse(
                status_code=404, content={"error": "unknown_flowchart"}
            )
        session = store.create(entry.graph, entry.id)
        return _session_view(session)

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return _session_view(store.get(session_id))

    @app.post("/api/sessions/{session_id}/step")
    def step_session(session_id: str, body: StepRequest):
        result = store.step(session_id, body.input, lexicon=config.lexicon)
        session = store.get(session_id)
        return {
            "next_state": result.next_state,
            "robot_output": result.robot_output,
            "kind": result.kind,
            "backward": result.backward,
            "done": result.done,
            "state": session.current_label,
            "state_kind": session.current_kind,
            "options": session.options(),
            "history_length": len(session.history),
        }

    @app.post("/api/sessions/{session_id}/reset")
    def reset_session(session_id: str):
        return _session_view(store.reset(session_id))

    @app.delete("/api/sessions/{session_id}")
    def delete_session(session_id: str):
        store.get(session_id)
        store.remove(session_id)
        return {"deleted": session_id}

    if config.static_dir is not None:
        app.mount(
            "/", StaticFiles(directory=str(config.static_dir), html=True), name="ui"
        )

    return app


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(config), host=config.bind, port=config.port)
