"""Reading and writing the line-oriented ``.tm`` text format.

Every declaration sits on its own line; ``#`` starts a comment::

    model D
    thimac Canary { create process }
    thimac Canary_2 "canary 2" in Canary storage { create release transfer }
    flow Canary_2.release -> Canary_2.transfer.out
    flow Canary_2.transfer.out -> Sky.transfer.in "fly"
    trigger Sea.receive -> Shark.process
    event Fly = { Canary_2.release, Sky.receive } desc "a canary flies" consumes X terminal
    schedule t=3: Fly, Sing d=2

A thimac with declared actions may still be creatable by convention; that is
written as the ``implicit`` keyword inside its action list.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .core import (
    IDENT_RE,
    ActionKind,
    ActionRef,
    FlowEdge,
    Port,
    SourceSpan,
    StaticModel,
    Thimac,
    TriggerEdge,
    errors_in,
    validate,
)
from .engine import EventDef, ScheduleEntry, define_event
from .errors import RejectsInvalidModel, TMError

ACTION_WORDS = [k.value for k in ActionKind]
STATEMENTS = ["model", "thimac", "flow", "trigger", "event", "schedule"]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#.*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<arrow>->)
  | (?P<word>[A-Za-z0-9_]+)
  | (?P<punct>[{}=,:.\-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class ParseDiagnostic:
    span: SourceSpan
    message: str
    expected: tuple = ()

    def __post_init__(self):
        if not self.message:
            raise ValueError("diagnostic needs a message")

    def format(self) -> str:
        text = f"ERROR E-PARSE {self.span} {self.message}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        return text


class ParseError(TMError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(d.format() for d in self.diagnostics))


@dataclass
class Document:
    """Everything a ``.tm`` file declares."""

    model: StaticModel
    events: list = field(default_factory=list)
    schedule: list = field(default_factory=list)

    def event_map(self) -> dict:
        return {e.id: e for e in self.events}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int

    def span(self):
        return SourceSpan(self.line, self.col, len(self.text))


class _Fail(Exception):
    def __init__(self, diagnostic):
        self.diagnostic = diagnostic


class _Line:
    def __init__(self, tokens, line_no, length):
        self.tokens = tokens
        self.pos = 0
        self.line_no = line_no
        self.length = length

    def peek(self) -> Optional[_Tok]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def fail(self, message, expected=(), tok=None):
        tok = tok if tok is not None else self.peek()
        if tok is None:
            span = SourceSpan(self.line_no, self.length + 1, 0)
            message += " at end of line"
        else:
            span = tok.span()
        raise _Fail(ParseDiagnostic(span, message, tuple(expected)))

    def next(self, what="token", expected=()) -> _Tok:
        tok = self.peek()
        if tok is None:
            self.fail(f"expected {what}", expected)
        self.pos += 1
        return tok

    def word(self, what="identifier") -> _Tok:
        tok = self.next(what)
        if tok.kind != "word":
            self.fail(f"expected {what}, found {tok.text!r}", tok=tok)
        return tok

    def keyword(self, *words) -> _Tok:
        tok = self.next(" or ".join(words), words)
        if tok.text not in words:
            self.fail(f"expected {' or '.join(words)}, found {tok.text!r}", words, tok)
        return tok

    def punct(self, text) -> _Tok:
        tok = self.next(repr(text), (text,))
        if tok.text != text or tok.kind == "string":
            self.fail(f"expected {text!r}, found {tok.text!r}", (text,), tok)
        return tok

    def accept(self, text) -> Optional[_Tok]:
        tok = self.peek()
        if tok is not None and tok.text == text and tok.kind != "string":
            self.pos += 1
            return tok
        return None

    def string(self) -> str:
        tok = self.next("string")
        if tok.kind != "string":
            self.fail(f"expected a quoted string, found {tok.text!r}", tok=tok)
        try:
            return json.loads(tok.text)
        except ValueError:
            self.fail("malformed string escape", tok=tok)

    def integer(self) -> int:
        negative = self.accept("-") is not None
        tok = self.word("integer")
        if not tok.text.isdigit():
            self.fail(f"expected an integer, found {tok.text!r}", tok=tok)
        value = int(tok.text)
        return -value if negative else value

    def end(self):
        tok = self.peek()
        if tok is not None:
            self.fail(f"unexpected {tok.text!r}", ("end of line",), tok)


def _tokenize(text, line_no):
    tokens, pos = [], 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            char = text[pos]
            what = "unterminated string" if char == '"' else f"unexpected character {char!r}"
            raise _Fail(ParseDiagnostic(SourceSpan(line_no, pos + 1, 1), what))
        kind = match.lastgroup
        if kind == "comment":
            break
        if kind != "ws":
            tokens.append(_Tok(kind, match.group(), line_no, pos + 1))
        pos = match.end()
    return tokens


def _action_ref(line: _Line) -> tuple[ActionRef, _Tok]:
    thimac = line.word("thimac name")
    line.punct(".")
    kind_tok = line.next("action keyword", ACTION_WORDS)
    if kind_tok.text not in ACTION_WORDS:
        line.fail(f"unknown action {kind_tok.text!r}", ACTION_WORDS, kind_tok)
    kind = ActionKind(kind_tok.text)
    port = None
    if line.accept("."):
        port_tok = line.keyword("in", "out")
        port = Port(port_tok.text)
    if kind is ActionKind.TRANSFER and port is None:
        line.fail("transfer needs a port", (".in", ".out"))
    if kind is not ActionKind.TRANSFER and port is not None:
        line.fail(f"{kind.value} takes no port", tok=port_tok)
    return ActionRef(thimac.text, kind, port), thimac


@dataclass
class _Raw:
    name: Optional[str] = None
    name_tok: Optional[_Tok] = None
    thimacs: list = field(default_factory=list)
    flows: list = field(default_factory=list)
    triggers: list = field(default_factory=list)
    events: list = field(default_factory=list)
    schedule: list = field(default_factory=list)


def _statement(line: _Line, raw: _Raw):
    head = line.next("statement", STATEMENTS)
    if head.text not in STATEMENTS:
        line.fail(f"unknown statement {head.text!r}", STATEMENTS, head)
    kind = head.text

    if kind == "model":
        if raw.name is not None:
            line.fail("model declared twice", tok=head)
        tok = line.peek()
        if tok is None:
            raw.name = ""
        elif tok.kind == "string":
            raw.name = line.string()
        else:
            raw.name = line.word("model name").text
        raw.name_tok = head
        line.end()

    elif kind == "thimac":
        ident = line.word("thimac name")
        name = line.string() if line.peek() and line.peek().kind == "string" else None
        parent = parent_tok = None
        if line.accept("in"):
            parent_tok = line.word("parent thimac")
            parent = parent_tok.text
        storage = line.accept("storage") is not None
        line.punct("{")
        actions, implicit = [], False
        allowed = ACTION_WORDS + ["implicit", "}"]
        while True:
            tok = line.next("action keyword or '}'", allowed)
            if tok.text == "}" and tok.kind == "punct":
                break
            if tok.text == "implicit" and tok.kind == "word":
                implicit = True
            elif tok.text in ACTION_WORDS and tok.kind == "word":
                actions.append(ActionKind(tok.text))
            else:
                line.fail(f"unknown action {tok.text!r}", allowed, tok)
        line.end()
        thimac = Thimac(
            ident.text,
            name,
            parent,
            frozenset(actions),
            storage,
            True if implicit or not actions else False,
            span=ident.span(),
        )
        raw.thimacs.append((thimac, ident, parent_tok))

    elif kind in ("flow", "trigger"):
        src, src_tok = _action_ref(line)
        line.punct("->")
        dst, dst_tok = _action_ref(line)
        label = None
        if kind == "flow" and line.peek() is not None and line.peek().kind == "string":
            label = line.string()
        line.end()
        span = SourceSpan(head.line, head.col, len(kind))
        if kind == "flow":
            raw.flows.append((FlowEdge(src, dst, label, span=span), src_tok, dst_tok))
        else:
            raw.triggers.append((TriggerEdge(src, dst, span=span), src_tok, dst_tok))

    elif kind == "event":
        ident = line.word("event name")
        line.punct("=")
        line.punct("{")
        refs = []
        if not line.accept("}"):
            while True:
                refs.append(_action_ref(line))
                if line.accept("}"):
                    break
                line.punct(",")
        label = ""
        if line.accept("desc"):
            label = line.string()
        consumes = []
        if line.accept("consumes"):
            consumes.append(line.word("thimac name"))
            while line.accept(","):
                consumes.append(line.word("thimac name"))
        terminal = line.accept("terminal") is not None
        line.end()
        raw.events.append((ident, refs, label, consumes, terminal))

    else:
        tick_word = line.word("'t'")
        if tick_word.text != "t":
            line.fail(f"expected 't', found {tick_word.text!r}", ("t",), tick_word)
        line.punct("=")
        tick = line.integer()
        line.punct(":")
        while True:
            event = line.word("event name")
            duration = 1
            if line.accept("d"):
                line.punct("=")
                duration = line.integer()
                if duration < 1:
                    line.fail("duration must be at least 1", tok=event)
            raw.schedule.append(ScheduleEntry(tick, event.text, duration))
            if not line.accept(","):
                break
        line.end()


def _resolve(raw: _Raw, diagnostics: list) -> Optional[Document]:
    def report(tok, message):
        diagnostics.append(ParseDiagnostic(tok.span(), message))

    model = StaticModel(name=raw.name or "")
    for thimac, ident, _ in raw.thimacs:
        if thimac.id in model.thimacs:
            report(ident, f"thimac {thimac.id!r} declared twice")
            continue
        model.thimacs[thimac.id] = thimac
    for thimac, _, parent_tok in raw.thimacs:
        if parent_tok is not None and thimac.parent not in model.thimacs:
            report(parent_tok, f"unknown parent thimac {thimac.parent!r}")

    def known(ref_tok, action):
        if action.thimac not in model.thimacs:
            report(ref_tok, f"unknown thimac {action.thimac!r}")
            return False
        return True

    for edge, src_tok, dst_tok in raw.flows:
        if known(src_tok, edge.src) & known(dst_tok, edge.dst):
            model.flows.append(edge)
    for edge, src_tok, dst_tok in raw.triggers:
        if known(src_tok, edge.src) & known(dst_tok, edge.dst):
            model.triggers.append(edge)

    events, seen = [], set()
    for ident, refs, label, consumes, terminal in raw.events:
        if ident.text in seen:
            report(ident, f"event {ident.text!r} declared twice")
            continue
        seen.add(ident.text)
        if not refs:
            report(ident, f"event {ident.text!r} has an empty region")
            continue
        ok = True
        for action, tok in refs:
            if not known(tok, action):
                ok = False
            elif not model.resolves(action):
                report(tok, f"{action.thimac} does not declare {action.kind.value}")
                ok = False
        for tok in consumes:
            if tok.text not in model.thimacs:
                report(tok, f"unknown thimac {tok.text!r}")
                ok = False
        if not ok:
            continue
        event = define_event(
            model,
            [a for a, _ in refs],
            label,
            [t.text for t in consumes],
            terminal,
            event_id=ident.text,
        )
        event.span = ident.span()
        events.append(event)
    if diagnostics:
        return None
    return Document(model, events, list(raw.schedule))


def parse(text: Union[str, bytes]) -> Document:
    """Parse ``.tm`` text; raise ParseError with every diagnostic found."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            prefix = bytes(text)[: exc.start]
            line = prefix.count(b"\n") + 1
            col = len(prefix) - (prefix.rfind(b"\n") + 1) + 1
            raise ParseError([ParseDiagnostic(SourceSpan(line, col, 1), "input is not valid UTF-8")])

    raw = _Raw()
    diagnostics: list[ParseDiagnostic] = []
    for number, content in enumerate(text.split("\n"), start=1):
        try:
            tokens = _tokenize(content, number)
            if tokens:
                _statement(_Line(tokens, number, len(content)), raw)
        except _Fail as failure:
            diagnostics.append(failure.diagnostic)
    if not diagnostics:
        document = _resolve(raw, diagnostics)
        if document is not None:
            return document
    raise ParseError(diagnostics)


# -- printing ----------------------------------------------------------------


def _quote(text: str) -> str:
    return json.dumps(text, ensure_ascii=False)


def _name(text: str) -> str:
    return text if text and IDENT_RE.match(text) else _quote(text)


def print_model(model: StaticModel, events=(), schedule=()) -> str:
    """Render canonical ``.tm`` text; parse(print_model(...)) rebuilds the input."""
    problems = errors_in(validate(model))
    if problems:
        raise RejectsInvalidModel(problems)

    lines = [f"model {_name(model.name)}"]
    thimac_lines = []
    for depth, thimac in model.walk():
        words = ["thimac", thimac.id]
        if thimac.name != thimac.id:
            words.append(_quote(thimac.name))
        if thimac.parent is not None:
            words += ["in", thimac.parent]
        if thimac.storage:
            words.append("storage")
        body = [k.value for k in thimac.sorted_actions()]
        if thimac.implicit_create and body:
            body.insert(0, "implicit")
        words.append("{ " + " ".join(body + ["}"]) if body else "{ }")
        thimac_lines.append("  " * depth + " ".join(words))

    edge_lines = []
    for edge in model.sorted_flows():
        text = f"flow {edge.src} -> {edge.dst}"
        if edge.label is not None:
            text += f" {_quote(edge.label)}"
        edge_lines.append(text)
    for edge in model.sorted_triggers():
        edge_lines.append(f"trigger {edge.src} -> {edge.dst}")

    event_lines = []
    for event in events:
        text = f"event {event.id} = {{ {', '.join(str(a) for a in event.actions)} }}"
        if event.label:
            text += f" desc {_quote(event.label)}"
        if event.consumes:
            text += " consumes " + ", ".join(event.consumes)
        if event.terminal:
            text += " terminal"
        event_lines.append(text)

    schedule_lines = []
    run: list[ScheduleEntry] = []
    for entry in list(schedule) + [None]:
        if run and (entry is None or entry.tick != run[0].tick):
            items = [e.event_id + (f" d={e.duration}" if e.duration != 1 else "") for e in run]
            schedule_lines.append(f"schedule t={run[0].tick}: {', '.join(items)}")
            run = []
        if entry is not None:
            run.append(entry)

    for block in (thimac_lines, edge_lines, event_lines, schedule_lines):
        if block:
            lines.append("")
            lines.extend(block)
    return "".join(line + "\n" for line in lines)


def format_document(document: Document) -> str:
    return print_model(document.model, document.events, document.schedule)
