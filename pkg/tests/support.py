"""Shared test helpers: fixture loading, random AST generation, and
independent brute-force oracles kept deliberately separate from the
implementations they check."""

from __future__ import annotations

import random
from pathlib import Path

from flowdial.parser import Action, ActivityAst, Branch, Decision, Repeat, Start, Stop

FIXTURES = Path(__file__).parent / "fixtures"

PAPER_FIXTURES = [
    "photo_shop",
    "lighting_install",
    "college_application",
    "power_supply",
]


def read_fixture(name: str) -> str:
    return (FIXTURES / f"{name}.puml").read_text(encoding="utf-8")


def random_ast(
    rng: random.Random,
    max_depth: int = 4,
    max_width: int = 5,
    label_prefix: str = "",
) -> ActivityAst:
    """Random well-formed AST with unique labels, bounded depth and width."""
    counter = iter(range(1, 10_000))

    def make_block(depth: int, min_nodes: int) -> tuple:
        width = rng.randint(min_nodes, max_width)
        nodes = []
        for _ in range(width):
            roll = rng.random()
            if depth >= max_depth or roll < 0.55:
                nodes.append(Action(f"{label_prefix}step {next(counter)}"))
            elif roll < 0.85:
                n_branches = rng.randint(2, 3)
                if n_branches == 2:
                    guards = ["yes", "no"]
                else:
                    guards = [f"option {next(counter)}" for _ in range(n_branches)]
                branches = tuple(
                    Branch(g, make_block(depth + 1, 0)) for g in guards
                )
                nodes.append(
                    Decision(f"{label_prefix}check {next(counter)}?", branches)
                )
            else:
                body = (Action(f"{label_prefix}step {next(counter)}"),) + make_block(
                    depth + 1, 0
                )
                nodes.append(
                    Repeat(body, f"{label_prefix}retry {next(counter)}?", "yes", "no")
                )
        return tuple(nodes)

    return ActivityAst((Start(),) + make_block(0, 1) + (Stop(),))


def sequential_ast(n_actions: int, label_prefix: str = "") -> ActivityAst:
    nodes = tuple(Action(f"{label_prefix}step {i}") for i in range(1, n_actions + 1))
    return ActivityAst((Start(),) + nodes + (Stop(),))


def brute_force_paths(graph, max_backward_traversals: int = 1) -> list[list[str]]:
    """Reference path enumeration: rebuilt adjacency, copied state, no
    shared mutation with the implementation under test."""
    adjacency: dict[int, list] = {n.id: [] for n in graph.nodes}
    for edge in graph.edges:
        adjacency[edge.src].append(edge)
    for node_id in adjacency:
        adjacency[node_id] = sorted(
            adjacency[node_id], key=lambda e: e.backward
        )  # stable: declaration order, backward edges last

    start = next(n.id for n in graph.nodes if n.kind == "start")
    stop = next(n.id for n in graph.nodes if n.kind == "stop")
    labels = {n.id: n.label for n in graph.nodes}

    results: list[list[str]] = []

    def explore(node_id: int, trail: list[str], used: dict) -> None:
        if node_id == stop:
            results.append(trail)
            return
        for edge in adjacency[node_id]:
            key = (edge.src, edge.dst, edge.guard)
            if edge.backward:
                if used.get(key, 0) >= max_backward_traversals:
                    continue
                new_used = dict(used)
                new_used[key] = new_used.get(key, 0) + 1
            else:
                new_used = used
            explore(edge.dst, trail + [labels[edge.dst]], new_used)

    explore(start, [labels[start]], {})
    return results


def brute_force_score(gold, predictions_by_id, normalize) -> dict:
    """Naive recount of every bucket for cross-checking evaluate()."""
    counts = {
        "overall": [0, 0],
        "sequential": [0, 0],
        "decision": [0, 0],
        "backward_lt": [0, 0],
        "backward_ge": [0, 0],
    }
    for sample in gold:
        pred = predictions_by_id.get(sample.id)
        ok = pred is not None and normalize(pred) == normalize(sample.next_state)
        for bucket in _buckets_for(sample):
            counts[bucket][0] += 1 if ok else 0
            counts[bucket][1] += 1
    return counts


def _buckets_for(sample) -> list[str]:
    buckets = ["overall", sample.sample_type]
    if sample.backward and sample.backward_distance is not None:
        buckets.append(
            "backward_lt" if sample.backward_distance < 5 else "backward_ge"
        )
    return buckets
