"""DOT output for static models and histories.

Style table:

============  =====================================================
element       DOT rendering
============  =====================================================
thimac        ``subgraph cluster_<id>``, rounded box, nested by parent
action        ellipse node ``"<thimac>.<kind>"``; implicit create dotted
transfer      one node; ``in``/``out`` ports become west/east ports
flow          solid edge, optional label
trigger       dashed edge
occurrence    note node ``E<i>@t=<start>`` with dotted edges to its region
============  =====================================================

Layout is left to whatever consumes the DOT text.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import ActionKind, ActionRef, Port, StaticModel, errors_in, validate
from .engine import History, check_subsistence
from .errors import RegionNotInModel, RejectsInvalidModel

DEFAULT_PALETTE = (
    "red",
    "blue",
    "darkgreen",
    "orange",
    "purple",
    "brown",
    "deeppink",
    "teal",
    "goldenrod",
    "slateblue",
)


@dataclass
class RenderOptions:
    highlight_events: list = field(default_factory=list)
    show_labels: bool = True
    palette: list = field(default_factory=lambda: list(DEFAULT_PALETTE))

    def __post_init__(self):
        if self.highlight_events and not self.palette:
            raise ValueError("a palette is required to highlight events")


def _q(text) -> str:
    escaped = str(text).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{escaped}"'


def node_id(action: ActionRef) -> str:
    return f"{action.thimac}.{action.kind.value}"


def _endpoint(action: ActionRef) -> str:
    if action.port is Port.IN:
        return f"{_q(node_id(action))}:w"
    if action.port is Port.OUT:
        return f"{_q(node_id(action))}:e"
    return _q(node_id(action))


def _implicit_nodes(model: StaticModel, extra=()) -> set:
    """Thimacs whose implicit create action is referenced somewhere."""
    used = set()
    refs = [e.src for e in model.flows] + [e.dst for e in model.flows]
    refs += [e.src for e in model.triggers] + [e.dst for e in model.triggers]
    refs += list(extra)
    for action in refs:
        thimac = model.thimacs.get(action.thimac)
        if thimac is not None and action.kind is ActionKind.CREATE and ActionKind.CREATE not in thimac.actions:
            used.add(thimac.id)
    return used


def _body(model: StaticModel, options: RenderOptions, colors: dict, extra_refs=()) -> list[str]:
    implicit = _implicit_nodes(model, extra_refs)
    lines = []

    def emit_cluster(thimac, depth):
        pad = "  " * (depth + 1)
        lines.append(f"{pad}subgraph {_q('cluster_' + thimac.id)} {{")
        lines.append(f"{pad}  label={_q(thimac.name)};")
        style = "rounded,bold" if thimac.storage else "rounded"
        lines.append(f"{pad}  style={_q(style)};")
        kinds = thimac.sorted_actions()
        if thimac.id in implicit:
            kinds = [ActionKind.CREATE] + kinds
        if not kinds:
            lines.append(f"{pad}  {_q(thimac.id + '.anchor')} [shape=point, style=invis];")
        for kind in kinds:
            action = ActionRef(thimac.id, kind, Port.IN if kind is ActionKind.TRANSFER else None)
            attrs = [f"label={_q(kind.value)}"]
            if kind not in thimac.actions:
                attrs.append('style="dotted"')
            color = colors.get(node_id(action))
            if color:
                attrs.append(f"color={_q(color)}")
                attrs.append("penwidth=2")
            lines.append(f"{pad}  {_q(node_id(action))} [{', '.join(attrs)}];")
        for child in model.children(thimac.id):
            emit_cluster(child, depth + 1)
        lines.append(f"{pad}}}")

    for root in model.roots():
        emit_cluster(root, 0)

    for edge in model.sorted_flows():
        attrs = ['style="solid"']
        if options.show_labels and edge.label:
            attrs.append(f"label={_q(edge.label)}")
        lines.append(f"  {_endpoint(edge.src)} -> {_endpoint(edge.dst)} [{', '.join(attrs)}];")
    for edge in model.sorted_triggers():
        lines.append(f'  {_endpoint(edge.src)} -> {_endpoint(edge.dst)} [style="dashed"];')
    return lines


def _header(model: StaticModel) -> list[str]:
    return [
        f"digraph {_q(model.name or 'model')} {{",
        "  compound=true;",
        "  rankdir=LR;",
        '  node [shape=ellipse, fontsize=10];',
    ]


def _require_valid(model):
    problems = errors_in(validate(model))
    if problems:
        raise RejectsInvalidModel(problems)


def _event_colors(events, options):
    colors = {}
    for i, event_id in enumerate(options.highlight_events):
        event = events.get(event_id)
        if event is None:
            continue
        for action in event.actions:
            colors.setdefault(node_id(action), options.palette[i % len(options.palette)])
    return colors


def render_static(model: StaticModel, options: RenderOptions = None, events=None) -> str:
    """Render the static model; ``events`` lets ``highlight_events`` color regions."""
    options = options or RenderOptions()
    _require_valid(model)
    events = {e.id: e for e in events} if isinstance(events, (list, tuple)) else dict(events or {})
    refs = [a for e in events.values() for a in e.actions]
    colors = _event_colors(events, options)
    lines = _header(model) + _body(model, options, colors, refs)
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_history(model: StaticModel, history: History, options: RenderOptions = None) -> str:
    """Render the model with every occurrence annotated ``E<i>@t=<start>``.

    Occurrences are numbered from 1 in chronology order. When
    ``highlight_events`` is set only occurrences of those events are drawn.
    """
    options = options or RenderOptions()
    _require_valid(model)
    for occ in history.occurrences:
        event = history.events.get(occ.event_id)
        if event is None:
            raise RegionNotInModel(f"occurrence of {occ.event_id!r} has no known region")
        check_subsistence(model, event)

    refs = [a for e in history.events.values() for a in e.actions]
    lines = _header(model) + _body(model, options, {}, refs)
    palette = options.palette or list(DEFAULT_PALETTE)
    legend = []
    for i, occ in enumerate(history.occurrences, start=1):
        if options.highlight_events and occ.event_id not in options.highlight_events:
            continue
        color = palette[(i - 1) % len(palette)]
        tag = f"E{i}@t={occ.start}"
        note = _q(f"occ{i}")
        label = f"{tag}\n{occ.event_id}"
        lines.append(f"  {note} [shape=note, color={_q(color)}, label={_q(label)}];")
        event = history.events[occ.event_id]
        for action in event.actions:
            lines.append(
                f"  {note} -> {_endpoint(action)} [style=\"dotted\", color={_q(color)}, arrowhead=none];"
            )
        legend.append(f"    {_q('legend' + str(i))} [shape=plaintext, label={_q(tag + ' ' + event.label)}];")
    lines.append(f"  subgraph {_q('cluster_legend')} {{")
    lines.append(f"    label={_q('chronology')};")
    lines.extend(legend)
    lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
