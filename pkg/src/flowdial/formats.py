"""State-representation formats: natural language, state codes, and hybrid.

State codes substitute ``S<k>`` for action labels and ``C<k>`` for decision
and loop conditions, numbered by first appearance in the rendered text.  The
hybrid form keeps both, joined as ``<code>: <label>``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum

from .parser import (
    Action,
    ActivityAst,
    Block,
    Branch,
    Decision,
    Repeat,
    iter_labeled_nodes,
)
from .render import render


class FormatScheme(Enum):
    NL = "nl"
    SC = "sc"
    HYBRID = "hybrid"


class CodeAssignmentError(Exception):
    """A label cannot receive a single code (state/condition collision)."""


class UnknownCodeError(Exception):
    def __init__(self, code: str):
        self.code = code
        super().__init__(f"unknown state code {code!r}")


_CODE_RE = re.compile(r"^[SC]\d+$")
_CODE_LABEL_RE = re.compile(r"^(?P<code>[SC]\d+):\s*(?P<label>.+)$", re.DOTALL)


@dataclass
class StateCodeDict:
    """Bijective, insertion-ordered label-to-code mapping."""

    label_to_code: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.code_to_label = {c: l for l, c in self.label_to_code.items()}
        if len(self.code_to_label) != len(self.label_to_code):
            raise CodeAssignmentError("code dictionary is not bijective")

    def code_for(self, label: str) -> str:
        return self.label_to_code[label]

    def label_for(self, code: str) -> str:
        try:
            return self.code_to_label[code]
        except KeyError:
            raise UnknownCodeError(code) from None

    def __len__(self) -> int:
        return len(self.label_to_code)

    def to_json(self) -> str:
        return json.dumps(self.label_to_code, ensure_ascii=False, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "StateCodeDict":
        return cls(json.loads(text))


def assign_codes(ast: ActivityAst) -> StateCodeDict:
    """S/C codes in textual first-appearance order, independent counters.

    Duplicate action labels share one code; a label used both as an action
    and as a condition cannot be encoded bijectively and raises.
    """
    mapping: dict[str, str] = {}
    kinds: dict[str, str] = {}
    counters = {"state": 0, "condition": 0}
    for kind, label in iter_labeled_nodes(ast.root):
        if label in kinds:
            if kinds[label] != kind:
                raise CodeAssignmentError(
                    f"label used as both state and condition: {label!r}"
                )
            continue
        kinds[label] = kind
        counters[kind] += 1
        prefix = "S" if kind == "state" else "C"
        mapping[label] = f"{prefix}{counters[kind]}"
    return StateCodeDict(mapping)


def _map_labels(block: Block, fn) -> Block:
    out = []
    for node in block:
        if isinstance(node, Action):
            out.append(Action(fn(node.label)))
        elif isinstance(node, Decision):
            out.append(
                Decision(
                    fn(node.condition),
                    tuple(
                        Branch(b.guard, _map_labels(b.block, fn))
                        for b in node.branches
                    ),
                )
            )
        elif isinstance(node, Repeat):
            out.append(
                Repeat(
                    _map_labels(node.body, fn),
                    fn(node.condition),
                    node.loop_guard,
                    node.exit_guard,
                )
            )
        else:
            out.append(node)
    return tuple(out)


@dataclass(frozen=True)
class FormattedFlowchart:
    flowchart_text: str
    state_dict: StateCodeDict | None


def to_format(ast: ActivityAst, scheme: FormatScheme) -> FormattedFlowchart:
    """Render the flowchart in the requested state-representation format.

    Guards (yes/no and is/not labels) are never encoded.
    """
    if scheme is FormatScheme.NL:
        return FormattedFlowchart(render(ast), None)
    codes = assign_codes(ast)
    if scheme is FormatScheme.SC:
        mapped = ActivityAst(_map_labels(ast.root, codes.code_for))
        return FormattedFlowchart(render(mapped), codes)
    mapped = ActivityAst(
        _map_labels(ast.root, lambda l: f"{codes.code_for(l)}: {l}")
    )
    return FormattedFlowchart(render(mapped), None)


def resolve_label(token: str, code_dict: StateCodeDict | None = None) -> str:
    """Canonical natural-language label for a code, a ``code: label`` pair,
    or a raw label (passed through)."""
    token = token.strip()
    m = _CODE_LABEL_RE.match(token)
    if m:
        return m.group("label").strip()
    if _CODE_RE.match(token):
        if code_dict is None:
            raise UnknownCodeError(token)
        return code_dict.label_for(token)
    return token
