"""Five-tuple dialogue sample synthesis, validation, and corpus handling.

Each extracted transition becomes one sample: (flowchart text, current
state, user input, next state, robot output).  The deterministic template
provider is the default; any object honoring AugmentationProvider (such as
the chat-completion provider) can fill the free-text fields instead.
Corpora are JSON Lines, one sample per line, UTF-8.
"""

from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .formats import FormatScheme, StateCodeDict, to_format
from .graph import (
    DECISION_KIND,
    SEQUENTIAL,
    STATE,
    StateGraph,
    Transition,
    build_graph,
    extract_transitions,
)
from .matching import (
    DEFAULT_LEXICON,
    GuardLexicon,
    UnmatchedGuardError,
    match_guard,
)
from .parser import ActivityAst, Diagnostic, validate_syntax


@dataclass(frozen=True)
class TemplateSet:
    """Configurable fill-in patterns for deterministic augmentation."""

    sequential_user: str = "{current} has been completed."
    decision_user: str = "Answer to '{current}': {guard}."
    robot_state: str = "Now process {next}."
    robot_decision: str = "Please make a choice: {next}"
    robot_terminal: str = "The process is complete."


TEMPLATES_EN = TemplateSet()

TEMPLATES_ZH = TemplateSet(
    sequential_user="{current}已完成。",
    decision_user="关于“{current}”的回答：{guard}。",
    robot_state="现在处理{next}。",
    robot_decision="请做出选择：{next}",
    robot_terminal="流程已完成。",
)


def template_user_input(t: Transition, templates: TemplateSet = TEMPLATES_EN) -> str:
    if t.kind == DECISION_KIND:
        return templates.decision_user.format(current=t.current, guard=t.guard)
    return templates.sequential_user.format(current=t.current)


def template_robot_output(t: Transition, templates: TemplateSet = TEMPLATES_EN) -> str:
    if t.next_is_decision:
        return templates.robot_decision.format(next=t.next)
    return templates.robot_state.format(next=t.next)


class AugmentationProvider(Protocol):
    """Fills the free-text halves of a five-tuple."""

    def user_input(self, flowchart_text: str, transition: Transition) -> str:
        ...

    def robot_output(
        self, flowchart_text: str, transition: Transition, user_input: str
    ) -> str:
        ...


class TemplateProvider:
    def __init__(self, templates: TemplateSet = TEMPLATES_EN):
        self.templates = templates

    def user_input(self, flowchart_text: str, transition: Transition) -> str:
        return template_user_input(transition, self.templates)

    def robot_output(
        self, flowchart_text: str, transition: Transition, user_input: str
    ) -> str:
        return template_robot_output(transition, self.templates)


@dataclass
class DialogueSample:
    id: str
    flowchart_id: str
    format: str
    flowchart_text: str
    state_dict: dict[str, str] | None
    current_state: str
    user_input: str
    next_state: str
    robot_output: str
    sample_type: str  # "sequential" | "decision"
    backward: bool = False
    backward_distance: int | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "flowchart_id": self.flowchart_id,
            "format": self.format,
            "flowchart_text": self.flowchart_text,
            "state_dict": self.state_dict,
            "current_state": self.current_state,
            "user_input": self.user_input,
            "next_state": self.next_state,
            "robot_output": self.robot_output,
            "sample_type": self.sample_type,
            "backward": self.backward,
            "backward_distance": self.backward_distance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DialogueSample":
        return cls(**{k: data.get(k) for k in cls.__dataclass_fields__})


class SynthesisError(Exception):
    """Synthesis could not produce a fully valid corpus."""

    def __init__(self, failures: list[tuple[Transition, list[Diagnostic]]]):
        self.failures = failures
        detail = "; ".join(
            f"{t.current!r}->{t.next!r}: {d[0].message if d else 'provider error'}"
            for t, d in failures
        )
        super().__init__(f"{len(failures)} transition(s) failed validation: {detail}")


def synthesize_samples(
    graph: StateGraph,
    flowchart_text: str,
    provider: AugmentationProvider,
    format: FormatScheme = FormatScheme.NL,
    *,
    flowchart_id: str = "flowchart",
    state_dict: StateCodeDict | None = None,
    max_retries: int = 3,
    validate: bool = True,
) -> list[DialogueSample]:
    """One sample per extracted transition, in graph edge order.

    Non-conforming provider output is regenerated up to max_retries times;
    remaining failures raise SynthesisError rather than emitting a partial
    corpus.
    """
    samples: list[DialogueSample] = []
    failures: list[tuple[Transition, list[Diagnostic]]] = []
    # The flowchart text is shared by every sample; check it once.
    syntax_diags = (
        [d for d in validate_syntax(flowchart_text) if d.severity == "error"]
        if validate
        else []
    )
    for idx, transition in enumerate(extract_transitions(graph)):
        sample: DialogueSample | None = None
        errors: list[Diagnostic] = []
        for _attempt in range(max_retries + 1):
            user = provider.user_input(flowchart_text, transition)
            robot = provider.robot_output(flowchart_text, transition, user)
            candidate = DialogueSample(
                id=f"{flowchart_id}:{idx:04d}",
                flowchart_id=flowchart_id,
                format=format.value,
                flowchart_text=flowchart_text,
                state_dict=state_dict.label_to_code if state_dict else None,
                current_state=transition.current,
                user_input=user,
                next_state=transition.next,
                robot_output=robot,
                sample_type=transition.kind,
                backward=transition.backward,
                backward_distance=transition.backward_distance,
            )
            if validate:
                errors = syntax_diags + [
                    d
                    for d in validate_sample(candidate, graph, check_syntax=False)
                    if d.severity == "error"
                ]
            else:
                errors = []
            if not errors:
                sample = candidate
                break
        if sample is None:
            failures.append((transition, errors))
        else:
            samples.append(sample)
    if failures:
        raise SynthesisError(failures)
    return samples


def synthesize_corpus(
    flowcharts: Sequence[tuple[str, ActivityAst]],
    provider: AugmentationProvider,
    format: FormatScheme = FormatScheme.NL,
    *,
    max_workers: int = 1,
    max_retries: int = 3,
) -> list[DialogueSample]:
    """Synthesize across flowcharts, optionally in parallel; ordering is
    deterministic (flowchart id, then edge index)."""

    def one(item: tuple[str, ActivityAst]) -> list[DialogueSample]:
        fid, ast = item
        graph = build_graph(ast)
        formatted = to_format(ast, format)
        return synthesize_samples(
            graph,
            formatted.flowchart_text,
            provider,
            format,
            flowchart_id=fid,
            state_dict=formatted.state_dict,
            max_retries=max_retries,
        )

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            chunks = list(pool.map(one, flowcharts))
    else:
        chunks = [one(item) for item in flowcharts]
    samples = [s for chunk in chunks for s in chunk]
    samples.sort(key=lambda s: (s.flowchart_id, s.id))
    return samples


def validate_sample(
    sample: DialogueSample,
    graph: StateGraph,
    lexicon: GuardLexicon = DEFAULT_LEXICON,
    check_syntax: bool = True,
) -> list[Diagnostic]:
    """Multi-level sample validation.

    1. current/next must name graph nodes joined by an edge;
    2. the flowchart text must be syntactically valid;
    3. decision samples' user input must select the edge's branch, either by
       containing the guard label or via a branch keyword from the lexicon.
    """
    diagnostics: list[Diagnostic] = []

    labels = {n.label for n in graph.nodes}
    edges = [
        e
        for e in graph.edges
        if graph.node(e.src).label == sample.current_state
        and graph.node(e.dst).label == sample.next_state
    ]
    if sample.current_state not in labels or sample.next_state not in labels:
        diagnostics.append(
            Diagnostic(
                "error",
                f"state not in flowchart: {sample.current_state!r} or "
                f"{sample.next_state!r}",
                0,
            )
        )
    elif not edges:
        diagnostics.append(
            Diagnostic(
                "error",
                f"no transition {sample.current_state!r} -> {sample.next_state!r}",
                0,
            )
        )

    if check_syntax:
        diagnostics.extend(validate_syntax(sample.flowchart_text))

    guards = [e.guard for e in edges if e.guard]
    if sample.sample_type == DECISION_KIND and guards:
        decisions = [
            n for n in graph.nodes_by_label(sample.current_state) if n.kind == "decision"
        ]
        all_guards = [
            e.guard for n in decisions for e in graph.out_edges(n.id) if e.guard
        ]
        try:
            chosen = match_guard(all_guards or guards, sample.user_input, lexicon)
        except UnmatchedGuardError:
            chosen = None
        if chosen not in guards:
            diagnostics.append(
                Diagnostic(
                    "error",
                    f"user input does not select branch {guards!r} "
                    f"(matched {chosen!r})",
                    0,
                )
            )
    return diagnostics


@dataclass(frozen=True)
class CorpusStats:
    flowchart_count: int
    state_node_count: int
    sequential_sample_count: int
    decision_sample_count: int
    dialogue_sample_count: int
    avg_length: float

    def table_row(self) -> dict:
        return {
            "Flowcharts": self.flowchart_count,
            "State Nodes": self.state_node_count,
            "Sequential Samples": self.sequential_sample_count,
            "Decision Samples": self.decision_sample_count,
            "Dialogue Samples": self.dialogue_sample_count,
            "Avg. Length": round(self.avg_length, 2),
        }


def corpus_stats(
    samples: Sequence[DialogueSample], graphs: dict[str, StateGraph]
) -> CorpusStats:
    """Counts per the dataset statistics schema.  Average length is the mean
    character count of the model-visible prompt portion: flowchart text +
    current state + user input."""
    ids: list[str] = []
    for s in samples:
        if s.flowchart_id not in graphs:
            raise ValueError(f"unknown flowchart_id {s.flowchart_id!r}")
        if s.flowchart_id not in ids:
            ids.append(s.flowchart_id)
    seq = sum(1 for s in samples if s.sample_type == SEQUENTIAL)
    dec = sum(1 for s in samples if s.sample_type == DECISION_KIND)
    total_len = sum(
        len(s.flowchart_text) + len(s.current_state) + len(s.user_input)
        for s in samples
    )
    return CorpusStats(
        flowchart_count=len(ids),
        state_node_count=sum(
            sum(1 for n in graphs[fid].nodes if n.kind == STATE) for fid in ids
        ),
        sequential_sample_count=seq,
        decision_sample_count=dec,
        dialogue_sample_count=len(samples),
        avg_length=total_len / len(samples) if samples else 0.0,
    )


def sample_subset(
    samples: Sequence[DialogueSample], budget: int, seed: int | None = None
) -> list[DialogueSample]:
    """Whole-flowchart greedy subset: flowcharts are taken in corpus order
    (shuffled when seeded) until the next one would exceed the budget."""
    order: list[str] = []
    groups: dict[str, list[DialogueSample]] = {}
    for s in samples:
        if s.flowchart_id not in groups:
            groups[s.flowchart_id] = []
            order.append(s.flowchart_id)
        groups[s.flowchart_id].append(s)
    if seed is not None:
        random.Random(seed).shuffle(order)
    out: list[DialogueSample] = []
    for fid in order:
        if len(out) + len(groups[fid]) > budget:
            break
        out.extend(groups[fid])
    return out


def mix_corpora(
    a: Sequence[DialogueSample],
    b: Sequence[DialogueSample],
    ratio: tuple[int, int] = (1, 1),
    strategy: str = "proportional",
    seed: int | None = None,
) -> list[DialogueSample]:
    """Deterministic interleave of two corpora.

    "proportional" trims both sides to the requested ratio (within one
    sample); "fixed" keeps all of b (the general-dialogue side) and mixes in
    all of a.
    """
    ra, rb = ratio
    if ra <= 0 or rb <= 0:
        raise ValueError("ratio components must be positive")
    a = list(a)
    b = list(b)
    if seed is not None:
        random.Random(seed).shuffle(a)
        random.Random(seed + 1).shuffle(b)
    if strategy == "fixed":
        na, nb = len(a), len(b)
    elif strategy == "proportional":
        units = min(len(a) // ra, len(b) // rb)
        na, nb = units * ra, units * rb
    else:
        raise ValueError(f"unknown mix strategy {strategy!r}")

    out: list[DialogueSample] = []
    ia = ib = 0
    while ia < na or ib < nb:
        if ib >= nb or (ia < na and ia * nb <= ib * na):
            out.append(a[ia])
            ia += 1
        else:
            out.append(b[ib])
            ib += 1
    return out


def write_corpus(samples: Iterable[DialogueSample], path: str | Path) -> int:
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(sample.to_dict(), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_corpus(path: str | Path) -> list[DialogueSample]:
    samples = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                samples.append(DialogueSample.from_dict(json.loads(line)))
    return samples
