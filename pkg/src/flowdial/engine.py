"""Deterministic runtime oracle over a state graph.

Given the current state and a user input, the engine resolves the unique
ground-truth next state: state nodes advance unconditionally, decision nodes
route through the guard-matching cascade.  Sessions wrap the oracle for
interactive walks; the matcher is rule-based on purpose so every verdict is
auditable.
"""

from __future__ import annotations

import itertools
import threading
import time
import uuid
from dataclasses import dataclass, field

from .graph import DECISION, STATE, STOP, GraphEdge, GraphNode, StateGraph, Transition
from .matching import DEFAULT_LEXICON, GuardLexicon, UnmatchedGuardError, match_guard
from .synth import TEMPLATES_EN, TemplateSet, template_robot_output

TERMINAL = "stop"


class EngineError(Exception):
    pass


class UnknownStateError(EngineError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"no state or decision named {label!r}")


class SessionDoneError(EngineError):
    def __init__(self, session_id: str):
        self.session_id = session_id
        super().__init__(f"session {session_id} is done")


class UnknownSessionError(EngineError):
    def __init__(self, session_id: str):
        self.session_id = session_id
        super().__init__(f"unknown session {session_id}")


@dataclass(frozen=True)
class StepResult:
    next_state: str
    robot_output: str
    kind: str  # "sequential" | "decision"
    backward: bool
    done: bool


def _resolve_edge(
    graph: StateGraph,
    current: str,
    user_input: str,
    lexicon: GuardLexicon,
) -> tuple[GraphNode, GraphEdge]:
    """Pick the edge the input selects from the node(s) labelled `current`.

    A label naming both a state and a decision (the corpora do this when an
    action repeats its condition's text) resolves to the decision when the
    input matches one of its guards, otherwise to the state.  Labels naming
    several nodes of one kind resolve by first appearance.
    """
    candidates = [
        n for n in graph.nodes_by_label(current) if n.kind in (STATE, DECISION)
    ]
    if not candidates:
        raise UnknownStateError(current)
    decisions = [n for n in candidates if n.kind == DECISION]
    states = [n for n in candidates if n.kind == STATE]

    if decisions:
        try:
            return decisions[0], _edge_from_node(graph, decisions[0], user_input, lexicon)
        except UnmatchedGuardError:
            if not states:
                raise
    return states[0], graph.out_edges(states[0].id)[0]


def _edge_from_node(
    graph: StateGraph,
    node: GraphNode,
    user_input: str,
    lexicon: GuardLexicon,
) -> GraphEdge:
    edges = graph.out_edges(node.id)
    if node.kind != DECISION:
        return edges[0]
    guard = match_guard([e.guard or "" for e in edges], user_input, lexicon)
    return next(e for e in edges if (e.guard or "") == guard)


def oracle_next_state(
    graph: StateGraph,
    current: str,
    user_input: str,
    lexicon: GuardLexicon = DEFAULT_LEXICON,
    templates: TemplateSet = TEMPLATES_EN,
) -> StepResult:
    """Ground-truth next state for (current, input); pure and deterministic."""
    node, edge = _resolve_edge(graph, current, user_input, lexicon)
    return _step_result(graph, node, edge, templates)


def _step_result(
    graph: StateGraph, node: GraphNode, edge: GraphEdge, templates: TemplateSet
) -> StepResult:
    dst = graph.node(edge.dst)
    done = dst.kind == STOP
    if done:
        robot = templates.robot_terminal
    else:
        robot = template_robot_output(
            Transition(
                current=node.label,
                guard=edge.guard,
                next=dst.label,
                kind="sequential" if node.kind == STATE else "decision",
                next_is_decision=dst.kind == DECISION,
            ),
            templates,
        )
    return StepResult(
        next_state=TERMINAL if done else dst.label,
        robot_output=robot,
        kind="sequential" if node.kind == STATE else "decision",
        backward=edge.backward,
        done=done,
    )


@dataclass
class Session:
    session_id: str
    flowchart_id: str
    graph: StateGraph
    current_id: int
    done: bool = False
    history: list[dict] = field(default_factory=list)
    archived_histories: list[list[dict]] = field(default_factory=list)
    backward_steps: int = 0
    last_access: float = field(default_factory=time.monotonic)

    @property
    def current_label(self) -> str:
        return self.graph.node(self.current_id).label

    @property
    def current_kind(self) -> str:
        kind = self.graph.node(self.current_id).kind
        return "decision" if kind == DECISION else "sequential"

    def options(self) -> list[str]:
        if self.graph.node(self.current_id).kind != DECISION:
            return []
        return [e.guard or "" for e in self.graph.out_edges(self.current_id)]


def start_session(
    graph: StateGraph,
    flowchart_id: str = "flowchart",
    session_id: str | None = None,
) -> Session:
    """New session positioned at the start node's successor."""
    first = graph.out_edges(graph.start_node.id)[0].dst
    return Session(
        session_id=session_id or uuid.uuid4().hex[:12],
        flowchart_id=flowchart_id,
        graph=graph,
        current_id=first,
        done=graph.node(first).kind == STOP,
    )


def step(
    session: Session,
    user_input: str,
    lexicon: GuardLexicon = DEFAULT_LEXICON,
    templates: TemplateSet = TEMPLATES_EN,
    max_backward_steps: int = 10,
) -> StepResult:
    """Advance the session; appends to history.  Exceeding the backward-step
    cap finishes the session so scripted walks always terminate."""
    if session.done:
        raise SessionDoneError(session.session_id)
    node = session.graph.node(session.current_id)
    edge = _edge_from_node(session.graph, node, user_input, lexicon)
    if edge.backward:
        session.backward_steps += 1
        if session.backward_steps > max_backward_steps:
            session.done = True
            raise SessionDoneError(session.session_id)
    result = _step_result(session.graph, node, edge, templates)
    session.history.append(
        {
            "state": node.label,
            "user_input": user_input,
            "next_state": result.next_state,
        }
    )
    session.current_id = edge.dst
    session.done = result.done
    session.last_access = time.monotonic()
    return result


def reset(session: Session) -> None:
    """Back to the start state; the finished walk is archived, not lost."""
    if session.history:
        session.archived_histories.append(session.history)
    session.history = []
    session.backward_steps = 0
    first = session.graph.out_edges(session.graph.start_node.id)[0].dst
    session.current_id = first
    session.done = session.graph.node(first).kind == STOP
    session.last_access = time.monotonic()


class SessionStore:
    """Thread-safe in-memory session registry with idle expiry."""

    def __init__(self, idle_timeout: float = 3600.0):
        self.idle_timeout = idle_timeout
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._mutex = threading.Lock()
        self._counter = itertools.count(1)

    def create(self, graph: StateGraph, flowchart_id: str) -> Session:
        with self._mutex:
            session_id = f"s{next(self._counter):06d}"
            session = start_session(graph, flowchart_id, session_id)
            self._sessions[session_id] = session
            self._locks[session_id] = threading.Lock()
            return session

    def get(self, session_id: str) -> Session:
        self.purge_idle()
        with self._mutex:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise UnknownSessionError(session_id) from None

    def step(self, session_id: str, user_input: str, **kwargs) -> StepResult:
        session = self.get(session_id)
        with self._locks[session_id]:
            return step(session, user_input, **kwargs)

    def reset(self, session_id: str) -> Session:
        session = self.get(session_id)
        with self._locks[session_id]:
            reset(session)
        return session

    def remove(self, session_id: str) -> None:
        with self._mutex:
            self._sessions.pop(session_id, None)
            self._locks.pop(session_id, None)

    def purge_idle(self) -> None:
        now = time.monotonic()
        with self._mutex:
            stale = [
                sid
                for sid, s in self._sessions.items()
                if now - s.last_access > self.idle_timeout
            ]
            for sid in stale:
                self._sessions.pop(sid, None)
                self._locks.pop(sid, None)
