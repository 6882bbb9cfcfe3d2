"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error.  Diagnostics go to
stderr, data to stdout or --out.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Sequence

import click

from .backward import AugmentPolicy, LoopInsertionError, augment_corpus_h
from .engine import SessionDoneError, start_session, step
from .evaluate import evaluate, read_predictions, render_report
from .formats import CodeAssignmentError, FormatScheme, UnknownCodeError, to_format
from .graph import (
    GraphStructureError,
    PathOverflowError,
    build_graph,
    enumerate_paths,
    extract_transitions,
)
from .llm import ChatCompletionClient, CompletionError, LlmProvider, ProviderConfig
from .matching import UnmatchedGuardError
from .parser import (
    Decision,
    FlowchartSyntaxError,
    Repeat,
    iter_actions,
    iter_conditions,
    parse,
    validate_syntax,
)
from .synth import (
    TEMPLATES_EN,
    TEMPLATES_ZH,
    SynthesisError,
    TemplateProvider,
    corpus_stats,
    mix_corpora,
    read_corpus,
    sample_subset,
    synthesize_corpus,
    write_corpus,
)

DATA_ERRORS = (
    FlowchartSyntaxError,
    GraphStructureError,
    PathOverflowError,
    SynthesisError,
    CodeAssignmentError,
    UnknownCodeError,
    LoopInsertionError,
    CompletionError,
    UnmatchedGuardError,
    SessionDoneError,
    ValueError,
    OSError,
)


class DataError(click.ClickException):
    exit_code = 2


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text)


def _load_flowcharts(paths: Sequence[str]) -> list[tuple[str, str]]:
    return [(Path(p).stem, _read(p)) for p in paths]


def _provider(kind: str, lang: str, endpoint: str, model: str, auth_env: str,
              cache_dir: str | None):
    if kind == "template":
        return TemplateProvider(TEMPLATES_ZH if lang == "zh" else TEMPLATES_EN)
    config = ProviderConfig(
        endpoint=endpoint, model=model, auth_env=auth_env, cache_dir=cache_dir
    )
    return LlmProvider(ChatCompletionClient(config))


@click.group()
def cli() -> None:
    """Flowchart-to-dialogue toolkit."""


@cli.command("parse")
@click.argument("file", type=click.Path(exists=True))
def parse_cmd(file: str) -> None:
    """Parse a .puml file and report its structure."""
    ast = parse(_read(file))
    repeats = sum(
        1 for c in _walk_nodes(ast.root) if isinstance(c, Repeat)
    )
    decisions = sum(1 for c in _walk_nodes(ast.root) if isinstance(c, Decision))
    click.echo(
        json.dumps(
            {
                "actions": len(iter_actions(ast.root)),
                "decisions": decisions,
                "repeats": repeats,
                "conditions": len(iter_conditions(ast.root)),
            }
        )
    )


def _walk_nodes(block):
    for node in block:
        yield node
        if isinstance(node, Decision):
            for branch in node.branches:
                yield from _walk_nodes(branch.block)
        elif isinstance(node, Repeat):
            yield from _walk_nodes(node.body)


@cli.command("graph")
@click.argument("file", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
def graph_cmd(file: str, out: str | None) -> None:
    """Export the state graph as JSON."""
    graph = build_graph(parse(_read(file)))
    _emit(json.dumps(graph.to_json_dict(), ensure_ascii=False, indent=2), out)


@cli.command("paths")
@click.argument("file", type=click.Path(exists=True))
@click.option("--max-backward", default=1, show_default=True)
@click.option("--cap", default=10_000, show_default=True)
def paths_cmd(file: str, max_backward: int, cap: int) -> None:
    """Enumerate start-to-stop paths."""
    graph = build_graph(parse(_read(file)))
    paths = enumerate_paths(graph, max_backward, cap)
    click.echo(str(len(paths)))
    for path in paths:
        click.echo(" -> ".join(path))


@cli.command("transitions")
@click.argument("file", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
def transitions_cmd(file: str, out: str | None) -> None:
    """Extract classified transitions as JSONL."""
    graph = build_graph(parse(_read(file)))
    lines = [
        json.dumps(
            {
                "current": t.current,
                "guard": t.guard,
                "next": t.next,
                "kind": t.kind,
                "backward": t.backward,
                "backward_distance": t.backward_distance,
            },
            ensure_ascii=False,
        )
        for t in extract_transitions(graph)
    ]
    _emit("\n".join(lines), out)


@cli.command("reformat")
@click.argument("file", type=click.Path(exists=True))
@click.option(
    "--format",
    "scheme",
    type=click.Choice(["nl", "sc", "hybrid"]),
    required=True,
)
@click.option("--out", type=click.Path(), default=None)
def reformat_cmd(file: str, scheme: str, out: str | None) -> None:
    """Rewrite a flowchart in another state-representation format."""
    formatted = to_format(parse(_read(file)), FormatScheme(scheme))
    if out:
        Path(out).write_text(formatted.flowchart_text + "\n", encoding="utf-8")
        if formatted.state_dict is not None:
            dict_path = Path(out).with_suffix(".dict.json")
            dict_path.write_text(formatted.state_dict.to_json(), encoding="utf-8")
    elif formatted.state_dict is not None:
        click.echo(
            json.dumps(
                {
                    "plantuml": formatted.flowchart_text,
                    "state_dict": formatted.state_dict.label_to_code,
                },
                ensure_ascii=False,
                indent=2,
            )
        )
    else:
        click.echo(formatted.flowchart_text)


@cli.command("gen")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--provider", "provider_kind", type=click.Choice(["template", "llm"]),
              default="template", show_default=True)
@click.option("--format", "scheme", type=click.Choice(["nl", "sc", "hybrid"]),
              default="nl", show_default=True)
@click.option("--lang", type=click.Choice(["en", "zh"]), default="en", show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.option("--workers", default=1, show_default=True)
@click.option("--endpoint", default=ProviderConfig.endpoint, show_default=True)
@click.option("--model", default=ProviderConfig.model, show_default=True)
@click.option("--auth-env", default=ProviderConfig.auth_env, show_default=True)
@click.option("--cache-dir", type=click.Path(), default=None)
def gen_cmd(files, provider_kind, scheme, lang, out, workers, endpoint, model,
            auth_env, cache_dir) -> None:
    """Synthesize a five-tuple dialogue corpus from flowcharts."""
    provider = _provider(provider_kind, lang, endpoint, model, auth_env, cache_dir)
    flowcharts = [(fid, parse(src)) for fid, src in _load_flowcharts(files)]
    samples = synthesize_corpus(
        flowcharts, provider, FormatScheme(scheme), max_workers=workers
    )
    if out:
        count = write_corpus(samples, out)
        click.echo(f"wrote {count} samples to {out}", err=True)
    else:
        for sample in samples:
            click.echo(json.dumps(sample.to_dict(), ensure_ascii=False))


@cli.command("augment-loop")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--min-span", default=1, show_default=True)
@click.option("--max-span", default=4, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--provider", "provider_kind", type=click.Choice(["template", "llm"]),
              default="template", show_default=True)
@click.option("--lang", type=click.Choice(["en", "zh"]), default="en", show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.option("--puml-dir", type=click.Path(), default=None,
              help="Directory for the augmented .puml files.")
@click.option("--endpoint", default=ProviderConfig.endpoint, show_default=True)
@click.option("--model", default=ProviderConfig.model, show_default=True)
@click.option("--auth-env", default=ProviderConfig.auth_env, show_default=True)
@click.option("--cache-dir", type=click.Path(), default=None)
def augment_loop_cmd(files, min_span, max_span, seed, provider_kind, lang, out,
                     puml_dir, endpoint, model, auth_env, cache_dir) -> None:
    """Insert backward loops and synthesize a PFDial-H style corpus."""
    provider = _provider(provider_kind, lang, endpoint, model, auth_env, cache_dir)
    flowcharts = _load_flowcharts(files)
    policy = AugmentPolicy(min_span=min_span, max_span=max_span, seed=seed)
    samples, rendered, report = augment_corpus_h(flowcharts, policy, provider)
    for fid in report.skipped:
        click.echo(f"warning: no viable loop site in {fid}, skipped", err=True)
    if out:
        write_corpus(samples, out)
    else:
        for sample in samples:
            click.echo(json.dumps(sample.to_dict(), ensure_ascii=False))
    if puml_dir:
        Path(puml_dir).mkdir(parents=True, exist_ok=True)
        kept = [fid for fid, _ in flowcharts if fid not in report.skipped]
        for fid, text in zip(kept, rendered):
            (Path(puml_dir) / f"{fid}.puml").write_text(text + "\n", encoding="utf-8")
    click.echo(json.dumps(report.table_row(), ensure_ascii=False))


@cli.command("validate")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True))
def validate_cmd(files) -> None:
    """Check syntax and graph structure; exit 2 on any error."""
    failed = False
    for path in files:
        diagnostics = validate_syntax(_read(path))
        if diagnostics:
            failed = True
            for d in diagnostics:
                click.echo(f"{path}: {d}", err=True)
            continue
        try:
            graph = build_graph(parse(_read(path)))
        except GraphStructureError as exc:
            failed = True
            click.echo(f"{path}: error: {exc}", err=True)
            continue
        for label in sorted(graph.ambiguous_labels()):
            click.echo(
                f"{path}: warning: label {label!r} names multiple nodes", err=True
            )
        click.echo(f"{path}: ok")
    if failed:
        raise DataError("validation failed")


@cli.command("stats")
@click.argument("corpus", type=click.Path(exists=True))
@click.option("--puml-dir", type=click.Path(exists=True), required=True)
def stats_cmd(corpus: str, puml_dir: str) -> None:
    """Corpus statistics (requires the source .puml files)."""
    samples = read_corpus(corpus)
    graphs = {
        p.stem: build_graph(parse(p.read_text(encoding="utf-8")))
        for p in sorted(Path(puml_dir).glob("*.puml"))
    }
    stats = corpus_stats(samples, graphs)
    click.echo(json.dumps(stats.table_row(), ensure_ascii=False, indent=2))


@cli.command("sample")
@click.argument("corpus", type=click.Path(exists=True))
@click.option("--budget", required=True, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--out", type=click.Path(), default=None)
def sample_cmd(corpus: str, budget: int, seed: int | None, out: str | None) -> None:
    """Flowchart-atomic subset of a corpus."""
    if budget < 0:
        raise click.BadParameter("budget must be >= 0")
    subset = sample_subset(read_corpus(corpus), budget, seed)
    if out:
        count = write_corpus(subset, out)
        click.echo(f"wrote {count} samples to {out}", err=True)
    else:
        for sample in subset:
            click.echo(json.dumps(sample.to_dict(), ensure_ascii=False))


@cli.command("mix")
@click.option("--a", "corpus_a", required=True, type=click.Path(exists=True))
@click.option("--b", "corpus_b", required=True, type=click.Path(exists=True))
@click.option("--ratio", default="1:1", show_default=True)
@click.option("--strategy", type=click.Choice(["proportional", "fixed"]),
              default="proportional", show_default=True)
@click.option("--seed", default=None, type=int)
@click.option("--out", type=click.Path(), default=None)
def mix_cmd(corpus_a, corpus_b, ratio, strategy, seed, out) -> None:
    """Interleave two corpora at a ratio."""
    try:
        ra, rb = (int(x) for x in ratio.split(":"))
    except ValueError:
        raise click.BadParameter(f"ratio must look like 2:1, got {ratio!r}")
    mixed = mix_corpora(
        read_corpus(corpus_a), read_corpus(corpus_b), (ra, rb), strategy, seed
    )
    if out:
        count = write_corpus(mixed, out)
        click.echo(f"wrote {count} samples to {out}", err=True)
    else:
        for sample in mixed:
            click.echo(json.dumps(sample.to_dict(), ensure_ascii=False))


@cli.command("eval")
@click.option("--gold", required=True, type=click.Path(exists=True))
@click.option("--pred", required=True, type=click.Path(exists=True))
@click.option("--report", "layout", type=click.Choice(["text", "json"]),
              default="text", show_default=True)
@click.option("--dist-threshold", default=5, show_default=True)
@click.option("--strict", is_flag=True, default=False)
def eval_cmd(gold, pred, layout, dist_threshold, strict) -> None:
    """Score predictions by exact match."""
    report = evaluate(
        read_corpus(gold), read_predictions(pred), dist_threshold, strict
    )
    click.echo(render_report(report, layout))


@cli.command("walk")
@click.argument("file", type=click.Path(exists=True))
@click.option("--transcript", type=click.Path(), default=None)
def walk_cmd(file: str, transcript: str | None) -> None:
    """Interactively walk a flowchart from the terminal."""
    graph = build_graph(parse(_read(file)))
    fid = Path(file).stem
    session = start_session(graph, fid)
    transcript_path = Path(transcript) if transcript else Path(f"{fid}.transcript.json")
    click.echo(f"Walking {fid}; type q to quit.", err=True)
    try:
        while not session.done:
            prompt = f"[{session.current_label}]"
            options = session.options()
            if options:
                prompt += f" (options: {', '.join(options)})"
            click.echo(prompt)
            try:
                line = input("> ")
            except EOFError:
                break
            if line.strip().lower() in ("q", "quit", "exit"):
                break
            try:
                result = step(session, line)
            except UnmatchedGuardError as exc:
                click.echo(
                    f"input matches no branch; options: {', '.join(exc.options)}",
                    err=True,
                )
                continue
            click.echo(result.robot_output)
        if session.done:
            click.echo("Reached stop.", err=True)
    finally:
        transcript_path.write_text(
            json.dumps(
                {
                    "flowchart_id": fid,
                    "history": session.history,
                    "completed": session.done,
                },
                ensure_ascii=False,
                indent=2,
            ),
            encoding="utf-8",
        )
        click.echo(f"transcript written to {transcript_path}", err=True)


@cli.command("serve")
@click.option("--bind", default="127.0.0.1", show_default=True)
@click.option("--port", default=8642, show_default=True)
@click.option("--corpus-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--static-dir", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--idle-timeout", default=1800.0, show_default=True)
def serve_cmd(bind, port, corpus_dir, static_dir, idle_timeout) -> None:
    """Serve the walker HTTP API (and optionally the UI bundle)."""
    from .service import ServiceConfig, serve

    config = ServiceConfig(
        corpus_dir=Path(corpus_dir),
        bind=bind,
        port=port,
        idle_timeout=idle_timeout,
        static_dir=Path(static_dir) if static_dir else None,
    )
    serve(config)


def run_cli(argv: Sequence[str] | None = None) -> int:
    """Dispatch argv; returns the exit code instead of raising SystemExit."""
    try:
        cli.main(args=list(argv) if argv is not None else None, standalone_mode=False)
        return 0
    except DataError as exc:
        click.echo(f"error: {exc.message}", err=True)
        return 2
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except DATA_ERRORS as exc:
        if isinstance(exc, FlowchartSyntaxError):
            for d in exc.diagnostics:
                click.echo(str(d), err=True)
        else:
            click.echo(f"error: {exc}", err=True)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
