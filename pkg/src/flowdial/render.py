"""Canonical PlantUML pretty-printer.

Output is byte-deterministic: one node per line, two-space indentation per
nesting level, LF endings, no trailing newline.  ``parse(render(ast))``
reconstructs a structurally identical AST.
"""

from __future__ import annotations

from .parser import Action, ActivityAst, Block, Decision, Repeat, Start, Stop


def render(ast: ActivityAst) -> str:
    lines: list[str] = ["@startuml"]
    _render_block(ast.root, 0, lines)
    lines.append("@enduml")
    return "\n".join(lines)


def _render_block(block: Block, depth: int, lines: list[str]) -> None:
    pad = "  " * depth
    for node in block:
        if isinstance(node, Start):
            lines.append(pad + "start")
        elif isinstance(node, Stop):
            lines.append(pad + "stop")
        elif isinstance(node, Action):
            lines.append(f"{pad}:{node.label};")
        elif isinstance(node, Decision):
            first, *middle, last = node.branches
            lines.append(f"{pad}if ({node.condition}) then ({first.guard})")
            _render_block(first.block, depth + 1, lines)
            # Middle branches of a flattened elseif chain round-trip with the
            # guard standing in for the elseif condition.
            for branch in middle:
                lines.append(f"{pad}elseif ({branch.guard})")
                _render_block(branch.block, depth + 1, lines)
            lines.append(f"{pad}else ({last.guard})")
            _render_block(last.block, depth + 1, lines)
            lines.append(pad + "endif")
        elif isinstance(node, Repeat):
            lines.append(pad + "repeat")
            _render_block(node.body, depth + 1, lines)
            lines.append(
                f"{pad}repeat while ({node.condition})"
                f" is ({node.loop_guard}) not ({node.exit_guard})"
            )
        else:  # pragma: no cover
            raise TypeError(f"unknown node type {type(node).__name__}")
