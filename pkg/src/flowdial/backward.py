"""Backward-transition augmentation: wrap action runs in repeat loops.

The rule-based augmenter proposes loop sites over consecutive sibling
actions, generates a condition that collides with no existing one, and
rebuilds the flowchart with a repeat around the chosen span.  The distance
of the resulting backward edge equals the span by construction.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .graph import build_graph
from .parser import (
    Action,
    ActivityAst,
    Block,
    Branch,
    Decision,
    FlowchartSyntaxError,
    Repeat,
    iter_actions,
    iter_conditions,
    parse,
)
from .render import render
from .synth import (
    AugmentationProvider,
    DialogueSample,
    TemplateProvider,
    synthesize_samples,
)


class LoopInsertionError(Exception):
    pass


@dataclass(frozen=True)
class LoopSite:
    """A candidate loop body: `span` consecutive actions of one block.

    `block_path` addresses the containing block from the root: each element
    is (node index, branch index) for descending into a decision branch; an
    empty path means the top-level block.
    """

    target_index: int
    span: int
    condition: str
    loop_guard: str = "yes"
    exit_guard: str = "no"
    block_path: tuple[tuple[int, int], ...] = ()


def _blocks_with_paths(
    block: Block, path: tuple[tuple[int, int], ...] = ()
) -> list[tuple[tuple[tuple[int, int], ...], Block]]:
    out = [(path, block)]
    for i, node in enumerate(block):
        if isinstance(node, Decision):
            for j, branch in enumerate(node.branches):
                out.extend(_blocks_with_paths(branch.block, path + ((i, j),)))
        # Repeat bodies are skipped: no nested-loop synthesis.
    return out


def propose_loop_sites(
    ast: ActivityAst,
    rng_seed: int | None = None,
    min_span: int = 1,
    max_span: int = 4,
) -> list[LoopSite]:
    """All loop sites over runs of consecutive sibling actions whose labels
    are unique in the flowchart (so the rebuilt graph stays unambiguous) and
    whose generated condition is fresh.  Deterministic; a seed only shuffles
    the proposal order."""
    existing_conditions = set(iter_conditions(ast.root))
    label_counts: dict[str, int] = {}
    for action in iter_actions(ast.root):
        label_counts[action.label] = label_counts.get(action.label, 0) + 1

    sites: list[LoopSite] = []
    for path, block in _blocks_with_paths(ast.root):
        for start in range(len(block)):
            for span in range(min_span, max_span + 1):
                nodes = block[start : start + span]
                if len(nodes) < span:
                    break
                if not all(isinstance(n, Action) for n in nodes):
                    break
                if any(label_counts[n.label] > 1 for n in nodes):
                    continue
                condition = f"{nodes[-1].label} unsuccessful?"
                if condition in existing_conditions:
                    continue
                sites.append(
                    LoopSite(
                        target_index=start,
                        span=span,
                        condition=condition,
                        block_path=path,
                    )
                )
    if rng_seed is not None:
        random.Random(rng_seed).shuffle(sites)
    return sites


def _rebuild(block: Block, path: tuple[tuple[int, int], ...], site: LoopSite) -> Block:
    if not path:
        if site.target_index + site.span > len(block):
            raise LoopInsertionError("loop site out of range")
        body = block[site.target_index : site.target_index + site.span]
        if not body or not all(isinstance(n, Action) for n in body):
            raise LoopInsertionError("loop body must be a run of actions")
        loop = Repeat(body, site.condition, site.loop_guard, site.exit_guard)
        return (
            block[: site.target_index]
            + (loop,)
            + block[site.target_index + site.span :]
        )
    (i, j), rest = path[0], path[1:]
    if i >= len(block) or not isinstance(block[i], Decision):
        raise LoopInsertionError("loop site path does not address a decision branch")
    decision: Decision = block[i]
    if j >= len(decision.branches):
        raise LoopInsertionError("loop site path addresses a missing branch")
    branches = list(decision.branches)
    branch = branches[j]
    branches[j] = Branch(branch.guard, _rebuild(branch.block, rest, site))
    return block[:i] + (Decision(decision.condition, tuple(branches)),) + block[i + 1 :]


def insert_backward_loop(ast: ActivityAst, site: LoopSite) -> ActivityAst:
    """New AST with the site's span wrapped in a repeat; original node order
    is preserved and the loop condition must be fresh."""
    if site.span < 1:
        raise LoopInsertionError("span must be at least 1")
    if site.loop_guard == site.exit_guard:
        raise LoopInsertionError("loop guard equals exit guard")
    if site.condition in set(iter_conditions(ast.root)):
        raise LoopInsertionError(f"condition {site.condition!r} already exists")
    return ActivityAst(_rebuild(ast.root, site.block_path, site))


@dataclass(frozen=True)
class AugmentPolicy:
    min_span: int = 1
    max_span: int = 4
    seed: int = 0


@dataclass(frozen=True)
class HCorpusReport:
    """Backward-corpus statistics split at the distance threshold."""

    backward_lt: int
    backward_ge: int
    dialogue_samples: int
    avg_length: float
    skipped: tuple[str, ...] = ()
    dist_threshold: int = 5

    def table_row(self) -> dict:
        return {
            f"Backward Distance < {self.dist_threshold}": self.backward_lt,
            f"Backward Distance >= {self.dist_threshold}": self.backward_ge,
            "Dialogue Samples": self.dialogue_samples,
            "Avg. Length": round(self.avg_length, 2),
        }


def augment_corpus_h(
    flowcharts: list[tuple[str, str]],
    policy: AugmentPolicy = AugmentPolicy(),
    provider: AugmentationProvider | None = None,
    dist_threshold: int = 5,
) -> tuple[list[DialogueSample], list[str], HCorpusReport]:
    """Insert one seeded-random loop per flowchart and synthesize samples.

    Returns (samples, augmented plantuml texts, report); flowcharts with no
    viable site are skipped and listed in the report.
    """
    provider = provider or TemplateProvider()
    rng = random.Random(policy.seed)
    samples: list[DialogueSample] = []
    rendered: list[str] = []
    skipped: list[str] = []
    for fid, source in flowcharts:
        ast = parse(source)
        sites = propose_loop_sites(
            ast, min_span=policy.min_span, max_span=policy.max_span
        )
        if not sites:
            skipped.append(fid)
            continue
        site = rng.choice(sites)
        augmented = insert_backward_loop(ast, site)
        text = render(augmented)
        graph = build_graph(parse(text))
        samples.extend(
            synthesize_samples(
                graph, text, provider, flowchart_id=fid
            )
        )
        rendered.append(text)

    backward = [s for s in samples if s.backward and s.backward_distance is not None]
    total_len = sum(
        len(s.flowchart_text) + len(s.current_state) + len(s.user_input)
        for s in samples
    )
    report = HCorpusReport(
        backward_lt=sum(1 for s in backward if s.backward_distance < dist_threshold),
        backward_ge=sum(1 for s in backward if s.backward_distance >= dist_threshold),
        dialogue_samples=len(samples),
        avg_length=total_len / len(samples) if samples else 0.0,
        skipped=tuple(skipped),
        dist_threshold=dist_threshold,
    )
    return samples, rendered, report


def _count_repeats(block: Block) -> int:
    count = 0
    for node in block:
        if isinstance(node, Repeat):
            count += 1 + _count_repeats(node.body)
        elif isinstance(node, Decision):
            count += sum(_count_repeats(b.block) for b in node.branches)
    return count


def llm_backward_loop(
    source: str,
    client,
    exemplar_pair: tuple[str, str],
    max_attempts: int = 3,
) -> ActivityAst:
    """Loop insertion via the chat-completion client, gated by the same
    validation as the rule-based path: the revision must parse, add exactly
    one loop, keep every original label, and use a fresh condition.
    Non-conforming responses are regenerated (cache bypassed on retries).
    """
    from .llm import build_backward_prompt, extract_plantuml

    original = parse(source)
    original_labels = [a.label for a in iter_actions(original.root)]
    original_conditions = set(iter_conditions(original.root))
    bundle = build_backward_prompt(source, exemplar_pair)
    reasons: list[str] = []
    for attempt in range(max_attempts):
        response = client.complete(bundle, use_cache=attempt == 0)
        try:
            revised = parse(extract_plantuml(response))
        except (ValueError, FlowchartSyntaxError) as exc:
            reasons.append(str(exc))
            continue
        revised_labels = [a.label for a in iter_actions(revised.root)]
        new_conditions = set(iter_conditions(revised.root)) - original_conditions
        if _count_repeats(revised.root) != _count_repeats(original.root) + 1:
            reasons.append("revision must add exactly one loop")
            continue
        if sorted(revised_labels) != sorted(original_labels):
            reasons.append("revision must preserve the original states")
            continue
        if len(new_conditions) != 1:
            reasons.append("loop condition must be new and unique")
            continue
        build_graph(revised)
        return revised
    raise LoopInsertionError(
        f"no valid loop after {max_attempts} attempts: {reasons}"
    )
