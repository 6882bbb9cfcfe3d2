"""State-transition graphs extracted from activity ASTs.

Actions become state nodes, decision and loop conditions become decision
nodes, and repeat loops add a backward edge from the condition back to the
first body node.  Nodes with identical labels merge when (and only when) the
merge keeps every state node at out-degree one, so a process that revisits a
step keeps a well-defined transition function wherever the text allows it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .parser import Action, ActivityAst, Block, Decision, Repeat, Start, Stop

START = "start"
STOP = "stop"
STATE = "state"
DECISION = "decision"

SEQUENTIAL = "sequential"
DECISION_KIND = "decision"


class GraphStructureError(Exception):
    """The AST is syntactically fine but does not form a valid state graph."""


class PathOverflowError(Exception):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"path enumeration exceeded cap of {cap}")


@dataclass(frozen=True)
class GraphNode:
    id: int
    kind: str
    label: str


@dataclass(frozen=True)
class GraphEdge:
    src: int
    dst: int
    guard: str | None = None
    backward: bool = False


@dataclass(frozen=True)
class Transition:
    """One (current, guard, next) step between state/decision nodes."""

    current: str
    guard: str | None
    next: str
    kind: str  # SEQUENTIAL | DECISION_KIND
    backward: bool = False
    backward_distance: int | None = None
    next_is_decision: bool = False


@dataclass(frozen=True)
class GraphStats:
    state_node_count: int
    decision_node_count: int
    sequential_transition_count: int
    decision_transition_count: int
    path_count: int


@dataclass
class StateGraph:
    nodes: list[GraphNode]
    edges: list[GraphEdge]
    _out: dict[int, list[GraphEdge]] = field(init=False, repr=False)
    _by_label: dict[str, list[GraphNode]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._out = {n.id: [] for n in self.nodes}
        self._by_label = {}
        for edge in self.edges:
            self._out[edge.src].append(edge)
        for node in self.nodes:
            self._by_label.setdefault(node.label, []).append(node)

    @property
    def start_node(self) -> GraphNode:
        return next(n for n in self.nodes if n.kind == START)

    @property
    def stop_node(self) -> GraphNode:
        return next(n for n in self.nodes if n.kind == STOP)

    def node(self, node_id: int) -> GraphNode:
        return self.nodes[node_id]

    def out_edges(self, node_id: int) -> list[GraphEdge]:
        return self._out[node_id]

    def nodes_by_label(self, label: str) -> list[GraphNode]:
        return self._by_label.get(label, [])

    def ambiguous_labels(self) -> set[str]:
        """Labels naming more than one node of the same kind.

        These arise when a revisited step has diverging successors and the
        occurrences therefore could not merge; (current, guard) lookups on
        such labels are resolved by first appearance.
        """
        out: set[str] = set()
        for label, nodes in self._by_label.items():
            kinds = [n.kind for n in nodes]
            if len(kinds) != len(set(kinds)):
                out.add(label)
        return out

    def to_json_dict(self) -> dict:
        return {
            "nodes": [
                {"id": n.id, "kind": n.kind, "label": n.label} for n in self.nodes
            ],
            "edges": [
                {"from": e.src, "to": e.dst, "guard": e.guard, "backward": e.backward}
                for e in self.edges
            ],
        }


class _Builder:
    def __init__(self) -> None:
        self.kinds: list[str] = []
        self.labels: list[str] = []
        self.edges: list[tuple[int, int, str | None, bool]] = []

    def new_node(self, kind: str, label: str) -> int:
        self.kinds.append(kind)
        self.labels.append(label)
        return len(self.kinds) - 1

    def connect(self, pending: list[tuple[int, str | None, bool]], dst: int) -> None:
        for src, guard, backward in pending:
            self.edges.append((src, dst, guard, backward))

    def thread_block(
        self, block: Block, pending: list[tuple[int, str | None, bool]]
    ) -> tuple[list[tuple[int, str | None, bool]], int | None]:
        """Wire a block into the graph; returns (dangling edges, entry node)."""
        entry: int | None = None
        for node in block:
            if isinstance(node, Start):
                nid = self.new_node(START, "start")
                pending = [(nid, None, False)]
            elif isinstance(node, Stop):
                nid = self.new_node(STOP, "stop")
                self.connect(pending, nid)
                pending = []
            elif isinstance(node, Action):
                nid = self.new_node(STATE, node.label)
                self.connect(pending, nid)
                pending = [(nid, None, False)]
            elif isinstance(node, Decision):
                nid = self.new_node(DECISION, node.condition)
                self.connect(pending, nid)
                joined: list[tuple[int, str | None, bool]] = []
                for branch in node.branches:
                    out, _ = self.thread_block(
                        branch.block, [(nid, branch.guard, False)]
                    )
                    joined.extend(out)
                pending = joined
            elif isinstance(node, Repeat):
                body_out, body_entry = self.thread_block(node.body, pending)
                cond_id = self.new_node(DECISION, node.condition)
                self.connect(body_out, cond_id)
                if body_entry is None:
                    raise GraphStructureError("repeat body produced no nodes")
                self.edges.append((cond_id, body_entry, node.loop_guard, True))
                pending = [(cond_id, node.exit_guard, False)]
                nid = body_entry
            else:  # pragma: no cover
                raise TypeError(f"unknown node type {type(node).__name__}")
            if entry is None:
                entry = nid
        return pending, entry


def build_graph(ast: ActivityAst) -> StateGraph:
    builder = _Builder()
    dangling, _ = builder.thread_block(ast.root, [])
    if dangling:
        raise GraphStructureError("flow does not terminate at stop")
    root = _merge_duplicates(builder)
    graph = _finalize(builder, root)
    _validate(graph)
    return graph


def _merge_duplicates(builder: _Builder) -> list[int]:
    """Union nodes sharing (kind, label) wherever targets stay functional.

    Runs to a fixpoint because merging two successors can make their
    predecessors mergeable in turn.  Groups whose successors diverge are
    left as distinct nodes rather than rejected; `ambiguous_labels` reports
    them downstream.
    """
    n = len(builder.kinds)
    root = list(range(n))

    def find(i: int) -> int:
        while root[i] != i:
            root[i] = root[root[i]]
            i = root[i]
        return i

    changed = True
    while changed:
        changed = False
        groups: dict[tuple[str, str], list[int]] = {}
        for i in range(n):
            r = find(i)
            key = (builder.kinds[i], builder.labels[i])
            bucket = groups.setdefault(key, [])
            if r not in bucket:
                bucket.append(r)
        succ: dict[int, dict[tuple[str | None, bool], int]] = {}
        for src, dst, guard, backward in builder.edges:
            succ.setdefault(find(src), {})[(guard, backward)] = find(dst)
        for (kind, _), members in groups.items():
            if len(members) < 2 or kind in (START, STOP):
                continue
            maps = [succ.get(m, {}) for m in members]
            if any(m != maps[0] for m in maps[1:]):
                continue
            anchor = min(members)
            for m in members:
                if find(m) != find(anchor):
                    root[find(m)] = find(anchor)
                    changed = True
    return [find(i) for i in range(n)]


def _finalize(builder: _Builder, root: list[int]) -> StateGraph:
    order: list[int] = []
    seen: set[int] = set()
    for i in range(len(root)):
        r = root[i]
        if r not in seen:
            seen.add(r)
            order.append(r)
    remap = {r: new_id for new_id, r in enumerate(order)}
    nodes = [
        GraphNode(remap[r], builder.kinds[r], builder.labels[r]) for r in order
    ]
    edges: list[GraphEdge] = []
    seen_edges: set[tuple[int, int, str | None, bool]] = set()
    for src, dst, guard, backward in builder.edges:
        key = (remap[root[src]], remap[root[dst]], guard, backward)
        if key in seen_edges:
            continue
        seen_edges.add(key)
        edges.append(GraphEdge(*key))
    return StateGraph(nodes, edges)


def _validate(graph: StateGraph) -> None:
    starts = [n for n in graph.nodes if n.kind == START]
    stops = [n for n in graph.nodes if n.kind == STOP]
    if len(starts) != 1 or len(stops) != 1:
        raise GraphStructureError("graph must have exactly one start and one stop")
    in_degree: dict[int, int] = {n.id: 0 for n in graph.nodes}
    for edge in graph.edges:
        in_degree[edge.dst] += 1
    if in_degree[starts[0].id] != 0:
        raise GraphStructureError("start node has incoming edges")
    if graph.out_edges(stops[0].id):
        raise GraphStructureError("stop node has outgoing edges")
    for node in graph.nodes:
        out = graph.out_edges(node.id)
        if node.kind == STATE:
            if len(out) != 1 or out[0].guard is not None:
                raise GraphStructureError(
                    f"state node {node.label!r} must have one unguarded exit"
                )
        elif node.kind == DECISION:
            guards = [e.guard for e in out]
            if len(out) < 2 or None in guards or len(set(guards)) != len(guards):
                raise GraphStructureError(
                    f"decision node {node.label!r} needs distinct guarded exits"
                )
    _check_reachability(graph)


def _check_reachability(graph: StateGraph) -> None:
    forward: dict[int, list[int]] = {n.id: [] for n in graph.nodes}
    reverse: dict[int, list[int]] = {n.id: [] for n in graph.nodes}
    for e in graph.edges:
        forward[e.src].append(e.dst)
        reverse[e.dst].append(e.src)

    def closure(adj: dict[int, list[int]], origin: int) -> set[int]:
        seen = {origin}
        queue = deque([origin])
        while queue:
            for nxt in adj[queue.popleft()]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return seen

    from_start = closure(forward, graph.start_node.id)
    to_stop = closure(reverse, graph.stop_node.id)
    for node in graph.nodes:
        if node.id not in from_start:
            raise GraphStructureError(f"node {node.label!r} unreachable from start")
        if node.id not in to_stop:
            raise GraphStructureError(f"node {node.label!r} cannot reach stop")


def enumerate_paths(
    graph: StateGraph,
    max_backward_traversals: int = 1,
    cap: int = 10_000,
) -> list[list[str]]:
    """All start-to-stop label walks, each backward edge used a bounded
    number of times.  Branch order follows declaration; loop exits are
    explored before loop repeats.
    """
    paths: list[list[str]] = []
    stop_id = graph.stop_node.id
    trail: list[str] = [graph.start_node.label]
    backward_used: dict[tuple[int, int, str | None], int] = {}

    def walk(node_id: int) -> None:
        if node_id == stop_id:
            if len(paths) >= cap:
                raise PathOverflowError(cap)
            paths.append(list(trail))
            return
        out = graph.out_edges(node_id)
        ordered = [e for e in out if not e.backward] + [e for e in out if e.backward]
        for edge in ordered:
            if edge.backward:
                key = (edge.src, edge.dst, edge.guard)
                if backward_used.get(key, 0) >= max_backward_traversals:
                    continue
                backward_used[key] = backward_used.get(key, 0) + 1
            trail.append(graph.node(edge.dst).label)
            walk(edge.dst)
            trail.pop()
            if edge.backward:
                backward_used[key] -= 1

    walk(graph.start_node.id)
    return paths


def backward_distance(graph: StateGraph, edge: GraphEdge) -> int:
    """Loop-body length: edges on the shortest forward-only path from the
    loop target back to the loop condition."""
    if not edge.backward:
        raise ValueError("edge is not a backward edge")
    dist = {edge.dst: 0}
    queue = deque([edge.dst])
    while queue:
        cur = queue.popleft()
        if cur == edge.src:
            return dist[cur]
        for nxt in graph.out_edges(cur):
            if nxt.backward or nxt.dst in dist:
                continue
            dist[nxt.dst] = dist[cur] + 1
            queue.append(nxt.dst)
    raise GraphStructureError("no forward path closes the loop")


def extract_transitions(graph: StateGraph) -> list[Transition]:
    """One transition per edge between state/decision nodes, in edge order,
    deduplicated by (current, guard, next)."""
    transitions: list[Transition] = []
    seen: set[tuple[str, str | None, str]] = set()
    for edge in graph.edges:
        src = graph.node(edge.src)
        dst = graph.node(edge.dst)
        if src.kind not in (STATE, DECISION) or dst.kind not in (STATE, DECISION):
            continue
        key = (src.label, edge.guard, dst.label)
        if key in seen:
            continue
        seen.add(key)
        transitions.append(
            Transition(
                current=src.label,
                guard=edge.guard,
                next=dst.label,
                kind=SEQUENTIAL if src.kind == STATE else DECISION_KIND,
                backward=edge.backward,
                backward_distance=backward_distance(graph, edge)
                if edge.backward
                else None,
                next_is_decision=dst.kind == DECISION,
            )
        )
    return transitions


def graph_stats(
    graph: StateGraph,
    max_backward_traversals: int = 1,
    cap: int = 10_000,
) -> GraphStats:
    transitions = extract_transitions(graph)
    return GraphStats(
        state_node_count=sum(1 for n in graph.nodes if n.kind == STATE),
        decision_node_count=sum(1 for n in graph.nodes if n.kind == DECISION),
        sequential_transition_count=sum(
            1 for t in transitions if t.kind == SEQUENTIAL
        ),
        decision_transition_count=sum(
            1 for t in transitions if t.kind == DECISION_KIND
        ),
        path_count=len(enumerate_paths(graph, max_backward_traversals, cap)),
    )
