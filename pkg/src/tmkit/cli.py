"""Command-line entry point: ``tmkit validate|simulate|import|render|fmt``.

Exit codes: 0 success, 1 validation or replay errors, 2 usage or parse errors.
Machine-readable output goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import os
import pathlib
import sys

import click

from . import __version__
from .core import errors_in, validate
from .dsl import ParseError, format_document, parse, print_model
from .engine import DEFAULT_MAX_TICK, continuity_check, format_history, parse_history, replay
from .errors import ImportFailure, RejectsInvalidModel, TMError
from .importers import import_er, import_triples, parse_er, parse_triples
from .render import RenderOptions, render_history, render_static

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2


def _err(line: str):
    click.echo(line, err=True)


def _read(path: str) -> str:
    try:
        return pathlib.Path(path).read_bytes().decode("utf-8")
    except OSError as exc:
        _err(f"error: cannot read {path}: {exc.strerror or exc}")
        sys.exit(EXIT_USAGE)
    except UnicodeDecodeError:
        _err(f"error: {path} is not valid UTF-8")
        sys.exit(EXIT_USAGE)


def _load(path: str):
    try:
        return parse(_read(path))
    except ParseError as exc:
        for diagnostic in exc.diagnostics:
            _err(f"{path}: {diagnostic.format()}")
        sys.exit(EXIT_USAGE)


def _fail(exc: Exception):
    if isinstance(exc, RejectsInvalidModel):
        for diagnostic in exc.diagnostics:
            _err(diagnostic.format())
    else:
        _err(f"error: {type(exc).__name__}: {exc}")
    sys.exit(EXIT_INVALID)


def _emit(text: str, out_path):
    if out_path:
        pathlib.Path(out_path).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


@click.group()
@click.version_option(__version__)
def main():
    """Thinging-machine models: check, replay, import and draw."""


@main.command("validate")
@click.argument("path")
def validate_cmd(path):
    """Check a .tm file; one diagnostic per line on stderr."""
    document = _load(path)
    diagnostics = validate(document.model)
    for event in document.events:
        diagnostics.extend(event.warnings)
    for diagnostic in diagnostics:
        _err(diagnostic.format())
    sys.exit(EXIT_INVALID if errors_in(diagnostics) else EXIT_OK)


@main.command("simulate")
@click.argument("path")
@click.option("--history-out", type=click.Path(dir_okay=False), help="Write the history here instead of stdout.")
@click.option("--max-tick", type=int, default=None, help="Stop after this tick (default TM_MAX_TICK or 10000).")
@click.option("--continuity", is_flag=True, help="Report gaps/overlaps between motion events on stderr.")
def simulate_cmd(path, history_out, max_tick, continuity):
    """Replay the schedule of a .tm file and print its history."""
    document = _load(path)
    if max_tick is None:
        try:
            max_tick = int(os.environ.get("TM_MAX_TICK", DEFAULT_MAX_TICK))
        except ValueError:
            _err("error: TM_MAX_TICK must be an integer")
            sys.exit(EXIT_USAGE)
    try:
        history = replay(document.model, document.events, document.schedule, max_tick=max_tick)
        report = continuity_check(history) if continuity else None
    except TMError as exc:
        _fail(exc)
    _emit(format_history(history), history_out)
    if report is not None:
        _err(
            f"continuity: gaps={len(report.gaps)} overlaps={len(report.overlaps)}"
            f" adjacencies={len(report.adjacencies)}"
        )
    for diagnostic in history.diagnostics:
        _err(diagnostic.format())
    sys.exit(EXIT_INVALID if errors_in(history.diagnostics) else EXIT_OK)


@main.command("import")
@click.option("--format", "fmt", type=click.Choice(["triples", "er"]), required=True)
@click.argument("in_path")
def import_cmd(fmt, in_path):
    """Translate triples or an ER schema into canonical .tm text."""
    text = _read(in_path)
    name = pathlib.Path(in_path).stem
    try:
        if fmt == "triples":
            model = import_triples(parse_triples(text), name=name)
        else:
            model = import_er(parse_er(text), name=name)
    except ImportFailure as exc:
        _err(f"{in_path}:{exc}")
        sys.exit(EXIT_USAGE)
    try:
        sys.stdout.write(print_model(model))
    except RejectsInvalidModel as exc:
        _fail(exc)


@main.command("render")
@click.argument("path")
@click.option("--history", "history_path", help="History file from `simulate` to annotate.")
@click.option("--highlight", multiple=True, help="Event id to highlight; repeatable.")
@click.option("--labels/--no-labels", default=True, help="Show flow labels.")
@click.option("-o", "--output", "out_path", type=click.Path(dir_okay=False), help="Write DOT here.")
def render_cmd(path, history_path, highlight, labels, out_path):
    """Emit DOT for a model, optionally annotated with a history."""
    document = _load(path)
    options = RenderOptions(highlight_events=list(highlight), show_labels=labels)
    try:
        if history_path:
            try:
                history = parse_history(_read(history_path), document.events)
            except ValueError as exc:
                _err(f"{history_path}: {exc}")
                sys.exit(EXIT_USAGE)
            text = render_history(document.model, history, options)
        else:
            text = render_static(document.model, options, document.events)
    except TMError as exc:
        _fail(exc)
    _emit(text, out_path)


@main.command("fmt")
@click.argument("path")
def fmt_cmd(path):
    """Print the canonical form of a .tm file."""
    document = _load(path)
    try:
        sys.stdout.write(format_document(document))
    except RejectsInvalidModel as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
