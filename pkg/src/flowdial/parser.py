"""Recursive-descent parser for the PlantUML activity-diagram subset.

Supported constructs: ``@startuml``/``@enduml`` fencing, ``start``/``stop``,
``:label;`` actions, ``if (cond) then (guard)`` / ``elseif`` / ``else (guard)``
/ ``endif`` decisions, and ``repeat`` ... ``repeat while (cond) is (x) not (y)``
loops.  Anything else tokenizes as ``Unknown`` and is rejected with an error
diagnostic.  Labels are normalized to Unicode NFC; fullwidth whitespace is
trimmed alongside ASCII whitespace.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from enum import Enum
from typing import Union


class TokenKind(Enum):
    START_UML = "StartUml"
    END_UML = "EndUml"
    START = "Start"
    STOP = "Stop"
    ACTION = "Action"
    IF_HEADER = "IfHeader"
    ELSEIF_HEADER = "ElseIfHeader"
    ELSE_HEADER = "ElseHeader"
    ENDIF = "EndIf"
    REPEAT = "Repeat"
    REPEAT_WHILE = "RepeatWhile"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Token:
    """One tokenized source line.

    ``text`` carries the semantic payload: the action label, the decision or
    loop condition, or the trimmed raw line for structural tokens.
    """

    kind: TokenKind
    text: str
    line_no: int
    guard: str | None = None
    loop_guard: str | None = None
    exit_guard: str | None = None


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    line_no: int

    def __str__(self) -> str:
        return f"line {self.line_no}: {self.severity}: {self.message}"


class FlowchartSyntaxError(Exception):
    """Parse failure; carries the error diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


# AST node types.  Frozen dataclasses over tuples give structural equality,
# which the render round-trip property relies on.


@dataclass(frozen=True)
class Start:
    pass


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class Action:
    label: str


@dataclass(frozen=True)
class Decision:
    condition: str
    branches: tuple["Branch", ...]


@dataclass(frozen=True)
class Branch:
    guard: str
    block: "Block"


@dataclass(frozen=True)
class Repeat:
    body: "Block"
    condition: str
    loop_guard: str
    exit_guard: str


Node = Union[Start, Stop, Action, Decision, Repeat]
Block = tuple[Node, ...]


@dataclass(frozen=True)
class ActivityAst:
    """Root block; first node is Start, last node is Stop."""

    root: Block

    def body(self) -> Block:
        return self.root[1:-1]


# Fullwidth space (U+3000) shows up in the Chinese corpora.
_WS = " \t\v\f\r\n　﻿"

_ACTION_RE = re.compile(r"^:(.*);$", re.DOTALL)
_IF_RE = re.compile(r"^if\s*\((?P<cond>.*)\)\s*then\s*\((?P<guard>.*?)\)$")
_ELSEIF_RE = re.compile(
    r"^else\s*if\s*\((?P<cond>.*?)\)(?:\s*then\s*\((?P<guard>.*?)\))?$"
)
_ELSE_RE = re.compile(r"^else\s*\((?P<guard>.*?)\)$")
_REPEAT_WHILE_RE = re.compile(
    r"^repeat\s*while\s*\((?P<cond>.*?)\)"
    r"(?:\s*is\s*\((?P<loop>.*?)\))?"
    r"(?:\s*not\s*\((?P<exit>.*?)\))?$"
)


def _clean(s: str) -> str:
    return unicodedata.normalize("NFC", s.strip(_WS))


def tokenize(source: str) -> list[Token]:
    """Tokenize PlantUML text, one token per non-blank line.

    Total: unrecognized lines become Unknown tokens, never an exception.
    """
    tokens: list[Token] = []
    for line_no, raw in enumerate(source.split("\n"), start=1):
        line = _clean(raw)
        if not line:
            continue
        tokens.append(_tokenize_line(line, line_no))
    return tokens


def _tokenize_line(line: str, line_no: int) -> Token:
    if line == "@startuml":
        return Token(TokenKind.START_UML, line, line_no)
    if line == "@enduml":
        return Token(TokenKind.END_UML, line, line_no)
    if line == "start":
        return Token(TokenKind.START, line, line_no)
    if line == "stop":
        return Token(TokenKind.STOP, line, line_no)
    if line == "endif":
        return Token(TokenKind.ENDIF, line, line_no)
    if line == "repeat":
        return Token(TokenKind.REPEAT, line, line_no)

    m = _ACTION_RE.match(line)
    if m:
        return Token(TokenKind.ACTION, _clean(m.group(1)), line_no)

    m = _REPEAT_WHILE_RE.match(line)
    if m:
        loop = m.group("loop")
        exit_ = m.group("exit")
        return Token(
            TokenKind.REPEAT_WHILE,
            _clean(m.group("cond")),
            line_no,
            loop_guard=_clean(loop) if loop is not None else None,
            exit_guard=_clean(exit_) if exit_ is not None else None,
        )

    m = _IF_RE.match(line)
    if m:
        return Token(
            TokenKind.IF_HEADER,
            _clean(m.group("cond")),
            line_no,
            guard=_clean(m.group("guard")),
        )

    # "elseif" and "else if" are both accepted; must be tried before "else".
    m = _ELSEIF_RE.match(line)
    if m:
        cond = _clean(m.group("cond"))
        guard = m.group("guard")
        return Token(
            TokenKind.ELSEIF_HEADER,
            cond,
            line_no,
            guard=_clean(guard) if guard is not None else cond,
        )

    m = _ELSE_RE.match(line)
    if m:
        return Token(TokenKind.ELSE_HEADER, line, line_no, guard=_clean(m.group("guard")))

    return Token(TokenKind.UNKNOWN, line, line_no)


_BLOCK_TERMINATORS = {
    TokenKind.ELSEIF_HEADER,
    TokenKind.ELSE_HEADER,
    TokenKind.ENDIF,
    TokenKind.REPEAT_WHILE,
    TokenKind.STOP,
    TokenKind.END_UML,
}


class Parser:
    """Token-cursor recursive-descent parser.

    Aborts on the first structural error; Unknown tokens are all reported
    up front so unsupported syntax surfaces in one pass.
    """

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token | None:
        if self.pos < len(self.tokens):
            return self.tokens[self.pos]
        return None

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, line_no: int) -> FlowchartSyntaxError:
        return FlowchartSyntaxError([Diagnostic("error", message, line_no)])

    def parse_document(self) -> ActivityAst:
        unknown = [
            Diagnostic("error", f"unsupported syntax: {t.text!r}", t.line_no)
            for t in self.tokens
            if t.kind is TokenKind.UNKNOWN
        ]
        if unknown:
            raise FlowchartSyntaxError(unknown)

        tok = self.peek()
        if tok is None or tok.kind is not TokenKind.START_UML:
            raise self.error("missing @startuml", tok.line_no if tok else 1)
        self.advance()

        tok = self.peek()
        if tok is None or tok.kind is not TokenKind.START:
            raise self.error("missing start", tok.line_no if tok else 1)
        start_tok = self.advance()

        body = self.parse_sequential()

        tok = self.peek()
        if tok is None or tok.kind is not TokenKind.STOP:
            line = tok.line_no if tok else start_tok.line_no
            raise self.error("missing stop", line)
        stop_tok = self.advance()

        tok = self.peek()
        if tok is None or tok.kind is not TokenKind.END_UML:
            raise self.error("missing @enduml", stop_tok.line_no)
        end_tok = self.advance()

        tok = self.peek()
        if tok is not None:
            raise self.error(f"content after @enduml: {tok.text!r}", tok.line_no)

        root: Block = (Start(),) + body + (Stop(),)
        _ = end_tok
        return ActivityAst(root)

    def parse_sequential(self) -> Block:
        """Consume actions, decisions and loops until a block terminator."""
        nodes: list[Node] = []
        while True:
            tok = self.peek()
            if tok is None or tok.kind in _BLOCK_TERMINATORS:
                return tuple(nodes)
            if tok.kind is TokenKind.ACTION:
                self.advance()
                if not tok.text:
                    raise self.error("empty action label", tok.line_no)
                nodes.append(Action(tok.text))
            elif tok.kind is TokenKind.IF_HEADER:
                nodes.append(self.parse_decision())
            elif tok.kind is TokenKind.REPEAT:
                nodes.append(self.parse_repeat())
            else:
                raise self.error(f"unexpected {tok.kind.value} token", tok.line_no)

    def parse_decision(self) -> Decision:
        """Parse if/elseif/else/endif into one Decision with ordered branches.

        elseif chains flatten into sibling branches; an if without else gets
        an implicit empty branch so every decision has at least two exits.
        """
        if_tok = self.advance()
        condition = if_tok.text
        if not condition:
            raise self.error("empty decision condition", if_tok.line_no)
        branches: list[Branch] = [Branch(if_tok.guard or "", self.parse_sequential())]
        saw_else = False
        while True:
            tok = self.peek()
            if tok is None:
                raise self.error(
                    f"missing endif for if at line {if_tok.line_no}", if_tok.line_no
                )
            if tok.kind is TokenKind.ELSEIF_HEADER:
                if saw_else:
                    raise self.error("elseif after else", tok.line_no)
                self.advance()
                branches.append(Branch(tok.guard or "", self.parse_sequential()))
            elif tok.kind is TokenKind.ELSE_HEADER:
                if saw_else:
                    raise self.error("duplicate else branch", tok.line_no)
                saw_else = True
                self.advance()
                branches.append(Branch(tok.guard or "", self.parse_sequential()))
            elif tok.kind is TokenKind.ENDIF:
                self.advance()
                break
            else:
                raise self.error(
                    f"missing endif for if at line {if_tok.line_no}", tok.line_no
                )

        if len(branches) == 1:
            implicit = "no" if branches[0].guard != "no" else "yes"
            branches.append(Branch(implicit, ()))

        guards = [b.guard for b in branches]
        for g in guards:
            if not g:
                raise self.error("empty branch guard", if_tok.line_no)
        if len(set(guards)) != len(guards):
            dup = next(g for g in guards if guards.count(g) > 1)
            raise self.error(f"duplicate guard label {dup!r}", if_tok.line_no)
        return Decision(condition, tuple(branches))

    def parse_repeat(self) -> Repeat:
        repeat_tok = self.advance()
        body = self.parse_sequential()
        tok = self.peek()
        if tok is None or tok.kind is not TokenKind.REPEAT_WHILE:
            raise self.error(
                f"missing repeat while for repeat at line {repeat_tok.line_no}",
                tok.line_no if tok else repeat_tok.line_no,
            )
        self.advance()
        if not body:
            raise self.error("empty repeat body", repeat_tok.line_no)
        if not tok.text:
            raise self.error("empty repeat condition", tok.line_no)
        loop_guard = tok.loop_guard if tok.loop_guard is not None else "yes"
        exit_guard = tok.exit_guard if tok.exit_guard is not None else "no"
        if loop_guard == exit_guard:
            raise self.error(
                f"loop guard equals exit guard {loop_guard!r}", tok.line_no
            )
        return Repeat(body, tok.text, loop_guard, exit_guard)


def parse(source: str) -> ActivityAst:
    """Parse PlantUML text into an ActivityAst.

    Deterministic in the source bytes.  Raises FlowchartSyntaxError carrying
    one or more error diagnostics on malformed input.
    """
    return Parser(tokenize(source)).parse_document()


def validate_syntax(source: str) -> list[Diagnostic]:
    """Return parse diagnostics; empty list iff `parse` would succeed."""
    try:
        parse(source)
    except FlowchartSyntaxError as exc:
        return exc.diagnostics
    return []


def iter_actions(block: Block) -> list[Action]:
    """All Action nodes in textual order, decisions and loops included."""
    out: list[Action] = []
    for node in block:
        if isinstance(node, Action):
            out.append(node)
        elif isinstance(node, Decision):
            for branch in node.branches:
                out.extend(iter_actions(branch.block))
        elif isinstance(node, Repeat):
            out.extend(iter_actions(node.body))
    return out


def iter_conditions(block: Block) -> list[str]:
    """All decision and loop conditions in textual order."""
    return [label for kind, label in iter_labeled_nodes(block) if kind == "condition"]


def iter_labeled_nodes(block: Block) -> list[tuple[str, str]]:
    """("state"|"condition", label) pairs in textual order.

    A repeat's condition line sits after its body, so it is emitted after
    the body's labels.
    """
    out: list[tuple[str, str]] = []
    for node in block:
        if isinstance(node, Action):
            out.append(("state", node.label))
        elif isinstance(node, Decision):
            out.append(("condition", node.condition))
            for branch in node.branches:
                out.extend(iter_labeled_nodes(branch.block))
        elif isinstance(node, Repeat):
            out.extend(iter_labeled_nodes(node.body))
            out.append(("condition", node.condition))
    return out
