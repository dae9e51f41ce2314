"""Actualization of static regions into timed occurrences.

``replay`` walks a discrete tick clock. At each tick it first closes the
exicons that are due, then starts the scheduled occurrences in schedule
order, then the occurrences enqueued by triggers on the previous tick.
Every occurrence opens a fresh exicon; ids are never reused.
"""

from __future__ import annotations

import copy
import enum
import json
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .core import (
    ActionKind,
    ActionRef,
    Diagnostic,
    FlowEdge,
    Port,
    Severity,
    SourceSpan,
    StaticModel,
    Thimac,
    TriggerEdge,
    errors_in,
    ref,
    validate,
)
from .errors import (
    AlreadyClosed,
    EmptyRegion,
    MultiTokenUnsupported,
    NegativeTick,
    RegionNotInModel,
    RejectsInvalidModel,
    TickOutOfRange,
    TriggerTargetAmbiguous,
    UnknownAction,
    UnknownEvent,
    UnknownOccurrence,
)

DEFAULT_MAX_TICK = 10_000
PAYLOAD_SEP = "|"


@dataclass(frozen=True)
class Region:
    actions: tuple
    edges: tuple = ()

    def flows(self):
        return [e for e in self.edges if isinstance(e, FlowEdge)]

    def triggers(self):
        return [e for e in self.edges if isinstance(e, TriggerEdge)]


@dataclass
class EventDef:
    id: str
    region: Region
    label: str = ""
    consumes: tuple = ()
    terminal: bool = False
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)
    warnings: list = field(default_factory=list, compare=False, repr=False)

    @property
    def actions(self) -> tuple:
        return self.region.actions

    @property
    def payload(self) -> Optional[str]:
        """Text after the last ``|`` of the label, used for created things."""
        if PAYLOAD_SEP not in self.label:
            return None
        return self.label.rsplit(PAYLOAD_SEP, 1)[1].strip() or None

    def creates(self) -> bool:
        return any(a.kind is ActionKind.CREATE for a in self.actions)


@dataclass(frozen=True)
class ScheduleEntry:
    tick: int
    event_id: str
    duration: int = 1


def _edge_key(edge):
    return edge.sort_key()


def define_event(
    model: StaticModel,
    action_refs: Iterable[ActionRef],
    label: str = "",
    consumes: Iterable[str] = (),
    terminal: bool = False,
    event_id: str = "E",
) -> EventDef:
    """Select a region of ``model`` and wrap it as an event definition.

    The region holds the given actions plus every model edge whose two ends
    are both among them. A region that falls apart into several pieces is
    accepted with a W-DISCONNECTED warning.
    """
    actions = tuple(dict.fromkeys(action_refs))
    if not actions:
        raise EmptyRegion(f"event {event_id} selects no actions")
    for action in actions:
        if not model.resolves(action):
            raise UnknownAction(f"event {event_id}: {action} does not name a declared action")
    for thimac_id in consumes:
        if thimac_id not in model.thimacs:
            raise UnknownAction(f"event {event_id}: consumes unknown thimac {thimac_id!r}")
    inside = set(actions)
    edges = [e for e in model.flows if e.src in inside and e.dst in inside]
    edges += [e for e in model.triggers if e.src in inside and e.dst in inside]
    edges = tuple(sorted(edges, key=lambda e: (isinstance(e, TriggerEdge), _edge_key(e))))
    event = EventDef(
        id=event_id,
        region=Region(actions, edges),
        label=label,
        consumes=tuple(consumes),
        terminal=terminal,
    )
    if _components(actions, edges) > 1:
        event.warnings.append(
            Diagnostic(
                Severity.WARNING,
                "W-DISCONNECTED",
                f"event {event_id}",
                "region is not connected",
            )
        )
    return event


def _components(actions, edges) -> int:
    parent = {a: a for a in actions}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for edge in edges:
        parent[find(edge.src)] = find(edge.dst)
    return len({find(a) for a in actions})


def execution_order(region: Region) -> list[ActionRef]:
    """Topological order over the region's edges; ties keep listing order."""
    position = {a: i for i, a in enumerate(region.actions)}
    indegree = {a: 0 for a in region.actions}
    succ = defaultdict(list)
    for edge in region.edges:
        succ[edge.src].append(edge.dst)
        indegree[edge.dst] += 1
    ready = sorted((a for a in region.actions if indegree[a] == 0), key=position.get)
    order = []
    while ready:
        action = ready.pop(0)
        order.append(action)
        for nxt in succ[action]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
                ready.sort(key=position.get)
    # edges may form a cycle across a boundary; fall back to listing order
    order += [a for a in region.actions if a not in order]
    return order


class ExiconStatus(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


@dataclass
class Exicon:
    id: int
    status: ExiconStatus = ExiconStatus.OPEN
    opened_at: int = 0
    closed_at: Optional[int] = None

    def close(self, tick: int):
        if self.status is ExiconStatus.CLOSED:
            raise AlreadyClosed(f"exicon {self.id} closed at {self.closed_at}")
        self.status = ExiconStatus.CLOSED
        self.closed_at = max(tick, self.opened_at)


@dataclass
class Token:
    id: int
    location: ActionRef
    payload: Optional[str] = None
    processed: bool = False
    alive: bool = True
    origin: Optional[int] = None


@dataclass(frozen=True)
class TokenState:
    token: int
    location: ActionRef
    payload: Optional[str]
    processed: bool


@dataclass
class Occurrence:
    event_id: str
    start: int
    duration: int
    exicon_id: int
    triggered_by: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        if self.duration < 1:
            raise ValueError("an occurrence lasts at least one tick")

    @property
    def end(self) -> int:
        """Last tick the occurrence occupies."""
        return self.start + self.duration - 1


@dataclass
class History:
    occurrences: list = field(default_factory=list)
    trajectory: dict = field(default_factory=dict)
    exicons: list = field(default_factory=list)
    final_tick: int = 0
    events: dict = field(default_factory=dict, compare=False, repr=False)
    token_origin: dict = field(default_factory=dict, compare=False, repr=False)
    diagnostics: list = field(default_factory=list, compare=False)

    def exicon(self, exicon_id: int) -> Exicon:
        for exicon in self.exicons:
            if exicon.id == exicon_id:
                return exicon
        raise KeyError(exicon_id)


def _events_by_id(events) -> dict:
    if isinstance(events, dict):
        return dict(events)
    return {e.id: e for e in events}


def check_subsistence(model: StaticModel, event: EventDef):
    """Raise RegionNotInModel unless the event's region lies inside ``model``."""
    for action in event.actions:
        if not model.resolves(action):
            raise RegionNotInModel(f"event {event.id}: {action} is not in the model")
    flows = {e.sort_key() for e in model.flows}
    triggers = {e.sort_key() for e in model.triggers}
    for edge in event.region.edges:
        pool = triggers if isinstance(edge, TriggerEdge) else flows
        if edge.sort_key() not in pool:
            raise RegionNotInModel(f"event {event.id}: {edge} is not in the model")


def trigger_targets(model: StaticModel, events: dict) -> dict:
    """Map (event id, trigger index) to the event a firing trigger enqueues."""
    targets = {}
    for event in events.values():
        inside = set(event.actions)
        for i, trig in enumerate(model.triggers):
            if trig.src not in inside or trig.dst in inside:
                continue
            owners = [e.id for e in events.values() if trig.dst in e.actions]
            if len(owners) != 1:
                raise TriggerTargetAmbiguous(
                    f"{trig} from event {event.id}: target lies in {len(owners)} events"
                    + (f" ({', '.join(owners)})" if owners else "")
                )
            targets[event.id, i] = owners[0]
    return targets


class _Run:
    def __init__(self, model, events, targets):
        self.model = model
        self.events = events
        self.targets = targets
        self.history = History(events=events)
        self.tokens: dict[int, Token] = {}
        self.closings = defaultdict(list)
        self.queued = defaultdict(list)
        self.created_by = defaultdict(list)
        self.preds = defaultdict(list)
        for edge in model.flows:
            self.preds[edge.dst].append(edge.src)

    def live(self):
        return [t for t in self.tokens.values() if t.alive]

    def kill(self, token, tick):
        token.alive = False

    def spawn(self, location, payload, occurrence):
        token = Token(len(self.tokens) + 1, location, payload, origin=occurrence)
        self.tokens[token.id] = token
        self.created_by[occurrence].append(token.id)
        self.history.token_origin[token.id] = occurrence
        return token

    def close_due(self, tick):
        for index in self.closings.pop(tick, []):
            occ = self.history.occurrences[index]
            exicon = self.history.exicon(occ.exicon_id)
            if exicon.status is ExiconStatus.CLOSED:
                continue
            exicon.close(tick)
            for token_id in self.created_by[index]:
                token = self.tokens[token_id]
                if token.alive and not self._settled(token):
                    self.kill(token, tick)

    def _settled(self, token):
        thimac = self.model.thimacs[token.location.thimac]
        return thimac.storage or token.location.kind is ActionKind.RECEIVE

    def start(self, event_id, tick, duration, triggered_by=None):
        event = self.events[event_id]
        index = len(self.history.occurrences)
        exicon = Exicon(len(self.history.exicons) + 1, opened_at=tick)
        self.history.exicons.append(exicon)
        self.history.occurrences.append(
            Occurrence(event_id, tick, duration, exicon.id, triggered_by)
        )

        doomed = set()
        for thimac_id in event.consumes:
            doomed |= {thimac_id} | self.model.descendants(thimac_id)
        for token in self.live():
            if token.location.thimac in doomed:
                self.kill(token, tick)
                if token.origin is not None:
                    origin = self.history.exicon(self.history.occurrences[token.origin].exicon_id)
                    if origin.status is ExiconStatus.OPEN:
                        origin.close(tick)

        for action in execution_order(event.region):
            self.execute(action, event, index)

        inside = set(event.actions)
        for i, trig in enumerate(self.model.triggers):
            if trig.src in inside and trig.dst not in inside:
                self.queued[tick + 1].append((self.targets[event_id, i], index))

        if not event.terminal:
            self.closings[tick + duration].append(index)

    def execute(self, action, event, index):
        if action.kind is ActionKind.CREATE:
            self.spawn(action, event.payload, index)
            return
        token = self._resident(action) or self._incoming(action)
        if token is None:
            return
        token.location = action
        if action.kind is ActionKind.PROCESS:
            token.processed = True

    def _resident(self, action):
        for token in self.live():
            if token.location == action:
                return token
        return None

    def _incoming(self, action):
        live = self.live()
        for pred in self.preds[action]:
            for token in live:
                if token.location == pred:
                    return token
        return None

    def snapshot(self, tick):
        self.history.trajectory[tick] = [
            TokenState(t.id, t.location, t.payload, t.processed) for t in self.live()
        ]


def replay(
    model: StaticModel,
    events,
    schedule: Sequence[ScheduleEntry],
    max_tick: int = DEFAULT_MAX_TICK,
) -> History:
    """Run ``schedule`` against ``model`` and return the resulting history."""
    problems = errors_in(validate(model))
    if problems:
        raise RejectsInvalidModel(problems)
    events = _events_by_id(events)
    for event in events.values():
        check_subsistence(model, event)
    entries = [_entry(e) for e in schedule]
    for entry in entries:
        if entry.tick < 0:
            raise NegativeTick(f"schedule entry for {entry.event_id} at t={entry.tick}")
        if entry.event_id not in events:
            raise UnknownEvent(f"schedule names unknown event {entry.event_id!r}")
        if entry.duration < 1:
            raise ValueError(f"duration of {entry.event_id} must be at least 1")
    targets = trigger_targets(model, events)

    run = _Run(model, events, targets)
    if not entries:
        return run.history

    by_tick = defaultdict(list)
    for entry in entries:
        by_tick[entry.tick].append(entry)

    tick = 0
    while True:
        pending = [t for t in list(by_tick) + list(run.queued) + list(run.closings) if t >= tick]
        if not pending:
            break
        if tick > max_tick:
            starts = [t for t in list(by_tick) + list(run.queued) if t >= tick]
            if starts:
                run.history.diagnostics.append(
                    Diagnostic(
                        Severity.ERROR,
                        "E-TICK-LIMIT",
                        f"t={tick}",
                        f"stopped at max tick {max_tick} with occurrences still pending",
                    )
                )
            break
        run.close_due(tick)
        for entry in by_tick.pop(tick, []):
            run.start(entry.event_id, tick, entry.duration)
        for event_id, cause in run.queued.pop(tick, []):
            run.start(event_id, tick, 1, triggered_by=cause)
        run.snapshot(tick)
        run.history.final_tick = tick
        tick += 1
    return run.history


def _entry(item) -> ScheduleEntry:
    if isinstance(item, ScheduleEntry):
        return item
    return ScheduleEntry(*item)


def deactualize(history: History, occurrence_id: int) -> History:
    """Revert one occurrence to a bare region: close its exicon, kill its things."""
    if not 0 <= occurrence_id < len(history.occurrences):
        raise UnknownOccurrence(f"no occurrence #{occurrence_id}")
    updated = copy.deepcopy(history)
    occ = updated.occurrences[occurrence_id]
    exicon = updated.exicon(occ.exicon_id)
    if exicon.status is ExiconStatus.CLOSED:
        raise AlreadyClosed(f"occurrence #{occurrence_id} ({occ.event_id}) is already closed")
    tick = updated.final_tick
    exicon.close(tick)
    created = {t for t, origin in updated.token_origin.items() if origin == occurrence_id}
    updated.trajectory[tick] = [s for s in updated.trajectory.get(tick, []) if s.token not in created]
    return updated


def token_state(history: History, tick: int) -> list[TokenState]:
    if tick < 0 or tick > history.final_tick:
        raise TickOutOfRange(f"tick {tick} outside 0..{history.final_tick}")
    return list(history.trajectory.get(tick, []))


def exicon_ledger(history: History) -> list[Exicon]:
    return list(history.exicons)


# -- movement chains -------------------------------------------------------

EXISTS_EVENT = "Arrow_exists"


def build_movement_chain(k: int, jump: bool = False):
    """Model an arrow moving from a source through ``k`` middles to a destination.

    Returns ``(model, events, schedule)``. Besides the arrow's existence
    event at t=0 there is one event per generic action on the path, 4k + 4
    in total, scheduled one per tick in flow order. With ``jump`` set, one
    idle tick separates every transfer(out) from the next transfer(in).
    """
    if k < 0:
        raise ValueError("middle count must be non-negative")
    model = StaticModel(name=f"zeno_k{k}")
    model.add_thimac(
        Thimac("Source", actions={ActionKind.RELEASE, ActionKind.TRANSFER}, implicit_create=True)
    )
    middles = [f"Middle_{i}" for i in range(1, k + 1)]
    for name in middles:
        model.add_thimac(
            Thimac(name, actions={ActionKind.TRANSFER, ActionKind.RECEIVE, ActionKind.RELEASE})
        )
    model.add_thimac(Thimac("Destination", actions={ActionKind.TRANSFER, ActionKind.RECEIVE}))

    path = [ActionRef("Source", ActionKind.RELEASE), ActionRef("Source", ActionKind.TRANSFER, Port.OUT)]
    for name in middles:
        path += [
            ActionRef(name, ActionKind.TRANSFER, Port.IN),
            ActionRef(name, ActionKind.RECEIVE),
            ActionRef(name, ActionKind.RELEASE),
            ActionRef(name, ActionKind.TRANSFER, Port.OUT),
        ]
    path += [ActionRef("Destination", ActionKind.TRANSFER, Port.IN), ActionRef("Destination", ActionKind.RECEIVE)]

    origin = ActionRef("Source", ActionKind.CREATE)
    model.add_flow(origin, path[0])
    for src, dst in zip(path, path[1:]):
        model.add_flow(src, dst)

    events = [define_event(model, [origin], "an arrow exists", terminal=True, event_id=EXISTS_EVENT)]
    schedule = [ScheduleEntry(0, EXISTS_EVENT)]
    tick = 0
    width = len(str(len(path)))
    for i, action in enumerate(path, start=1):
        tick += 1
        if jump and action.kind is ActionKind.TRANSFER and action.port is Port.IN:
            tick += 1
        event_id = f"G{i:0{width}d}"
        events.append(define_event(model, [action], f"arrow {action}", event_id=event_id))
        schedule.append(ScheduleEntry(tick, event_id))
    return model, events, schedule


def generic_events(events: Iterable[EventDef]) -> list[EventDef]:
    """Events that move a thing rather than bring one into existence."""
    return [e for e in events if not e.creates()]


@dataclass
class ContinuityReport:
    gaps: list = field(default_factory=list)
    overlaps: list = field(default_factory=list)
    adjacencies: list = field(default_factory=list)

    @property
    def continuous(self) -> bool:
        return not self.gaps


def continuity_check(history: History) -> ContinuityReport:
    """Classify each boundary between consecutive motion occurrences.

    Existence occurrences (regions containing a create) are skipped; the
    boundary between two motion occurrences is an overlap when they share a
    tick, an adjacency when one ends right before the next starts, and a gap
    otherwise.
    """
    for tick, states in history.trajectory.items():
        if len(states) > 1:
            raise MultiTokenUnsupported(f"{len(states)} things alive at t={tick}")
    moves = []
    for index, occ in enumerate(history.occurrences):
        event = history.events.get(occ.event_id)
        if event is not None and event.creates():
            continue
        moves.append((index, occ))
    report = ContinuityReport()
    for (i, first), (j, second) in zip(moves, moves[1:]):
        pair = (i, j)
        if second.start <= first.end:
            report.overlaps.append(pair)
        elif second.start == first.end + 1:
            report.adjacencies.append(pair)
        else:
            report.gaps.append(pair)
    return report


# -- history text ------------------------------------------------------------

_OCC_RE = re.compile(
    r"t=(?P<start>\d+) d=(?P<dur>\d+) event=(?P<event>\S+) exicon=(?P<exicon>\d+)"
    r"(?: closed@(?P<closed>\d+))?\Z"
)
_TOKEN_RE = re.compile(
    r"  token=(?P<id>\d+) at=(?P<at>\S+) payload=(?P<payload>-|\".*\") processed=(?P<p>yes|no)\Z"
)


def format_history(history: History) -> str:
    """Serialize ``history`` as line-oriented text (byte-stable)."""
    lines = []
    for occ in history.occurrences:
        exicon = history.exicon(occ.exicon_id)
        line = f"t={occ.start} d={occ.duration} event={occ.event_id} exicon={exicon.id}"
        if exicon.status is ExiconStatus.CLOSED:
            line += f" closed@{exicon.closed_at}"
        lines.append(line)
    if history.occurrences:
        for tick in range(history.final_tick + 1):
            lines.append(f"tokens@{tick}")
            for state in history.trajectory.get(tick, []):
                payload = "-" if state.payload is None else json.dumps(state.payload, ensure_ascii=False)
                processed = "yes" if state.processed else "no"
                lines.append(f"  token={state.token} at={state.location} payload={payload} processed={processed}")
    return "".join(line + "\n" for line in lines)


def parse_history(text: str, events=None) -> History:
    """Read text produced by ``format_history`` back into a History."""
    history = History(events=_events_by_id(events or {}))
    tick = None
    for number, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        if raw.startswith("tokens@"):
            tick = int(raw[len("tokens@"):])
            history.trajectory[tick] = []
            history.final_tick = max(history.final_tick, tick)
            continue
        match = _TOKEN_RE.match(raw)
        if match and tick is not None:
            payload = None if match["payload"] == "-" else json.loads(match["payload"])
            history.trajectory[tick].append(
                TokenState(int(match["id"]), ref(match["at"]), payload, match["p"] == "yes")
            )
            continue
        match = _OCC_RE.match(raw)
        if match is None or tick is not None:
            raise ValueError(f"line {number}: not a history line: {raw!r}")
        start = int(match["start"])
        exicon = Exicon(int(match["exicon"]), opened_at=start)
        if match["closed"] is not None:
            exicon.status = ExiconStatus.CLOSED
            exicon.closed_at = int(match["closed"])
        history.exicons.append(exicon)
        history.occurrences.append(Occurrence(match["event"], start, int(match["dur"]), exicon.id))
    return history
