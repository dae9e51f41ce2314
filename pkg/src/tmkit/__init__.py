"""Executable toolkit for thinging-machine (TM) conceptual models."""

from .core import (
    ActionKind,
    ActionRef,
    Diagnostic,
    FlowEdge,
    Port,
    Severity,
    StaticModel,
    Thimac,
    TriggerEdge,
    new_model,
    ref,
    validate,
)
from .dsl import Document, ParseError, format_document, parse, print_model
from .engine import (
    EventDef,
    ScheduleEntry,
    build_movement_chain,
    continuity_check,
    deactualize,
    define_event,
    exicon_ledger,
    format_history,
    parse_history,
    replay,
    token_state,
)
from .importers import import_er, import_triples, parse_er, parse_triples
from .render import RenderOptions, render_history, render_static

__version__ = "0.1.0"
