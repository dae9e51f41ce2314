"""Static TM models: thimacs, generic actions, flows and triggers.

A model is a forest of thimacs. Each thimac declares a subset of the five
generic actions; flow edges connect actions according to a fixed grammar
(see ``FLOW_GRAMMAR``) and trigger edges link actions of different thimacs.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .errors import (
    BoundaryViolation,
    DuplicateId,
    IllegalFlowPair,
    NestingCycle,
    SameThimacTrigger,
    UnknownAction,
    UnknownParent,
)

IDENT_RE = re.compile(r"[A-Za-z0-9_]+\Z")


class ActionKind(enum.Enum):
    CREATE = "create"
    PROCESS = "process"
    RELEASE = "release"
    TRANSFER = "transfer"
    RECEIVE = "receive"

    def __str__(self):
        return self.value


class Port(enum.Enum):
    IN = "in"
    OUT = "out"

    def __str__(self):
        return self.value


ACTION_ORDER = {kind: i for i, kind in enumerate(ActionKind)}

C, P, RL, T, RC = (
    ActionKind.CREATE,
    ActionKind.PROCESS,
    ActionKind.RELEASE,
    ActionKind.TRANSFER,
    ActionKind.RECEIVE,
)

# (src kind, src port, dst kind, dst port) pairs legal inside one thimac.
INTRA_FLOWS = frozenset(
    {
        (C, None, P, None),
        (C, None, RL, None),
        (RC, None, P, None),
        (RC, None, RL, None),
        (P, None, RL, None),
        (T, Port.IN, RC, None),
        (RL, None, T, Port.OUT),
    }
)
# The only pair that may cross a thimac boundary.
CROSS_FLOWS = frozenset({(T, Port.OUT, T, Port.IN)})

FLOW_GRAMMAR = {"intra": INTRA_FLOWS, "cross": CROSS_FLOWS}


@dataclass(frozen=True, order=False)
class ActionRef:
    thimac: str
    kind: ActionKind
    port: Optional[Port] = None

    def __post_init__(self):
        if (self.kind is ActionKind.TRANSFER) != (self.port is not None):
            raise ValueError(
                f"{self.thimac}.{self.kind}: port is required for transfer and only for transfer"
            )

    def __str__(self):
        text = f"{self.thimac}.{self.kind.value}"
        if self.port is not None:
            text += f".{self.port.value}"
        return text

    def sort_key(self):
        return str(self)


def ref(text: str) -> ActionRef:
    """Build an ActionRef from ``Thimac.kind[.port]`` text."""
    parts = text.split(".")
    if len(parts) not in (2, 3):
        raise ValueError(f"bad action reference {text!r}")
    kind = ActionKind(parts[1])
    port = Port(parts[2]) if len(parts) == 3 else None
    return ActionRef(parts[0], kind, port)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int = 0

    def __post_init__(self):
        if self.line < 1 or self.column < 1 or self.length < 0:
            raise ValueError(f"invalid span {self.line}:{self.column}+{self.length}")

    def __str__(self):
        return f"{self.line}:{self.column}"


@dataclass
class Thimac:
    id: str
    name: Optional[str] = None
    parent: Optional[str] = None
    actions: frozenset = frozenset()
    storage: bool = False
    implicit_create: Optional[bool] = None
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.name is None:
            self.name = self.id
        self.actions = frozenset(ActionKind(a) for a in self.actions)
        if self.implicit_create is None:
            self.implicit_create = not self.actions

    def has_action(self, kind: ActionKind) -> bool:
        if kind in self.actions:
            return True
        return kind is ActionKind.CREATE and self.implicit_create

    def sorted_actions(self) -> list[ActionKind]:
        return sorted(self.actions, key=ACTION_ORDER.__getitem__)


@dataclass
class FlowEdge:
    src: ActionRef
    dst: ActionRef
    label: Optional[str] = None
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def sort_key(self):
        return (self.src.sort_key(), self.dst.sort_key(), self.label or "")

    def __str__(self):
        return f"flow {self.src} -> {self.dst}"


@dataclass
class TriggerEdge:
    src: ActionRef
    dst: ActionRef
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def sort_key(self):
        return (self.src.sort_key(), self.dst.sort_key())

    def __str__(self):
        return f"trigger {self.src} -> {self.dst}"


class Severity(enum.Enum):
    ERROR = "ERROR"
    WARNING = "WARNING"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    location: str
    message: str
    span: Optional[SourceSpan] = field(default=None, compare=False)

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def format(self) -> str:
        where = str(self.span) if self.span is not None else "0:0"
        return f"{self.severity} {self.code} {where} {self.message}"


def classify_flow(src: ActionRef, dst: ActionRef) -> Optional[type]:
    """Return the exception class a flow would raise, or None if it is legal."""
    key = (src.kind, src.port, dst.kind, dst.port)
    transfers = src.kind is T and dst.kind is T
    if src.thimac == dst.thimac:
        if transfers:
            return BoundaryViolation
        return None if key in INTRA_FLOWS else IllegalFlowPair
    if not transfers:
        return BoundaryViolation
    return None if key in CROSS_FLOWS else IllegalFlowPair


@dataclass(eq=False)
class StaticModel:
    name: str = ""
    thimacs: dict = field(default_factory=dict)
    flows: list = field(default_factory=list)
    triggers: list = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, StaticModel):
            return NotImplemented
        return (
            self.name == other.name
            and self.thimacs == other.thimacs
            and sorted(f.sort_key() for f in self.flows)
            == sorted(f.sort_key() for f in other.flows)
            and sorted(t.sort_key() for t in self.triggers)
            == sorted(t.sort_key() for t in other.triggers)
        )

    # -- construction -------------------------------------------------

    def add_thimac(self, thimac: Thimac) -> "StaticModel":
        if thimac.id in self.thimacs:
            raise DuplicateId(f"thimac {thimac.id!r} already declared")
        if thimac.parent is not None:
            if thimac.parent == thimac.id:
                raise NestingCycle(f"thimac {thimac.id!r} cannot be its own parent")
            if thimac.parent not in self.thimacs:
                raise UnknownParent(f"parent {thimac.parent!r} of {thimac.id!r} is not declared")
        self.thimacs[thimac.id] = thimac
        return self

    def add_flow(self, src: ActionRef, dst: ActionRef, label: Optional[str] = None) -> "StaticModel":
        self._require(src)
        self._require(dst)
        error = classify_flow(src, dst)
        if error is not None:
            raise error(f"flow {src} -> {dst} is not allowed")
        self.flows.append(FlowEdge(src, dst, label))
        return self

    def add_trigger(self, src: ActionRef, dst: ActionRef) -> "StaticModel":
        self._require(src)
        self._require(dst)
        if src.thimac == dst.thimac:
            raise SameThimacTrigger(f"trigger {src} -> {dst} stays inside {src.thimac}")
        self.triggers.append(TriggerEdge(src, dst))
        return self

    def _require(self, action: ActionRef):
        if not self.resolves(action):
            raise UnknownAction(f"{action} does not name a declared action")

    # -- queries ------------------------------------------------------

    def resolves(self, action: ActionRef) -> bool:
        thimac = self.thimacs.get(action.thimac)
        return thimac is not None and thimac.has_action(action.kind)

    def children(self, thimac_id: Optional[str]) -> list[Thimac]:
        return [t for t in self.thimacs.values() if t.parent == thimac_id]

    def roots(self) -> list[Thimac]:
        return [t for t in self.thimacs.values() if t.parent is None]

    def walk(self) -> Iterator[tuple[int, Thimac]]:
        """Yield (depth, thimac) in pre-order, siblings in declaration order."""

        def visit(thimac, depth):
            yield depth, thimac
            for child in self.children(thimac.id):
                yield from visit(child, depth + 1)

        for root in self.roots():
            yield from visit(root, 0)

    def ancestors(self, thimac_id: str) -> list[str]:
        chain, seen = [], {thimac_id}
        current = self.thimacs[thimac_id].parent
        while current is not None and current in self.thimacs and current not in seen:
            chain.append(current)
            seen.add(current)
            current = self.thimacs[current].parent
        return chain

    def descendants(self, thimac_id: str) -> set[str]:
        found = set()
        stack = [thimac_id]
        while stack:
            for child in self.children(stack.pop()):
                if child.id not in found:
                    found.add(child.id)
                    stack.append(child.id)
        return found

    def action_refs(self) -> list[ActionRef]:
        """Every declared action of every thimac, transfers split into ports."""
        refs = []
        for thimac in self.thimacs.values():
            for kind in thimac.sorted_actions():
                if kind is T:
                    refs.append(ActionRef(thimac.id, kind, Port.IN))
                    refs.append(ActionRef(thimac.id, kind, Port.OUT))
                else:
                    refs.append(ActionRef(thimac.id, kind))
        return refs

    def sorted_flows(self) -> list[FlowEdge]:
        return sorted(self.flows, key=FlowEdge.sort_key)

    def sorted_triggers(self) -> list[TriggerEdge]:
        return sorted(self.triggers, key=TriggerEdge.sort_key)


def new_model(name: str) -> StaticModel:
    return StaticModel(name=name)


def _error(code, location, message, span=None):
    return Diagnostic(Severity.ERROR, code, location, message, span)


def _warning(code, location, message, span=None):
    return Diagnostic(Severity.WARNING, code, location, message, span)


def _check_ref(model, action, where, span) -> Iterable[Diagnostic]:
    thimac = model.thimacs.get(action.thimac)
    if thimac is None:
        yield _error("E-UNKNOWN-THIMAC", where, f"{action.thimac!r} is not a declared thimac", span)
    elif not thimac.has_action(action.kind):
        yield _error(
            "E-UNKNOWN-ACTION", where, f"{action.thimac} does not declare {action.kind}", span
        )


def validate(model: StaticModel) -> list[Diagnostic]:
    """Return every well-formedness violation in ``model``.

    An empty list means the model is well formed. Warnings never make a model
    invalid; callers decide with ``Diagnostic.is_error``.
    """
    diagnostics: list[Diagnostic] = []
    emit = diagnostics.append

    for thimac in model.thimacs.values():
        where = f"thimac {thimac.id}"
        if not IDENT_RE.match(thimac.id):
            emit(_error("E-BAD-ID", where, f"{thimac.id!r} is not a valid identifier", thimac.span))
        if thimac.parent is not None and thimac.parent not in model.thimacs:
            emit(_error("E-UNKNOWN-PARENT", where, f"parent {thimac.parent!r} is not declared", thimac.span))
        if not thimac.actions and not thimac.implicit_create:
            emit(_error("E-EMPTY-THIMAC", where, "declares no actions and no implicit creation", thimac.span))

    for thimac in model.thimacs.values():
        seen = {thimac.id}
        current = thimac.parent
        while current is not None and current in model.thimacs:
            if current in seen:
                emit(_error("E-NESTING-CYCLE", f"thimac {thimac.id}", "parent chain loops", thimac.span))
                break
            seen.add(current)
            current = model.thimacs[current].parent

    for edge in model.flows:
        where = str(edge)
        bad = list(_check_ref(model, edge.src, where, edge.span))
        bad += _check_ref(model, edge.dst, where, edge.span)
        if bad:
            diagnostics.extend(bad)
            continue
        error = classify_flow(edge.src, edge.dst)
        if error is BoundaryViolation:
            emit(_error("E-BOUNDARY", where, "only transfer(out) -> transfer(in) may cross a boundary", edge.span))
        elif error is IllegalFlowPair:
            emit(_error("E-ILLEGAL-FLOW", where, "pair is not in the flow grammar", edge.span))

    for edge in model.triggers:
        where = str(edge)
        bad = list(_check_ref(model, edge.src, where, edge.span))
        bad += _check_ref(model, edge.dst, where, edge.span)
        diagnostics.extend(bad)
        if not bad and edge.src.thimac == edge.dst.thimac:
            emit(_error("E-SAME-THIMAC-TRIGGER", where, "triggers must cross thimacs", edge.span))

    inbound = {e.dst.thimac for e in model.flows if e.src.thimac != e.dst.thimac}
    for thimac in model.thimacs.values():
        if ActionKind.CREATE in thimac.actions or thimac.implicit_create:
            continue
        if thimac.id not in inbound:
            emit(
                _warning(
                    "W-NO-ORIGIN",
                    f"thimac {thimac.id}",
                    "no create action and nothing flows in; its things can never exist",
                    thimac.span,
                )
            )
    return diagnostics


def errors_in(diagnostics: Iterable[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diagnostics if d.is_error]
