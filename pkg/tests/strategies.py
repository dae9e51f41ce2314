"""Hypothesis strategies for well-formed models, events and schedules."""

from hypothesis import strategies as st

from tmkit.core import INTRA_FLOWS, ActionKind, ActionRef, Port, StaticModel, Thimac
from tmkit.engine import ScheduleEntry, define_event

idents = st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,6}", fullmatch=True)
texts = st.text(
    st.characters(blacklist_categories=("Cs",), blacklist_characters="\x00"), max_size=12
)
kinds = st.sampled_from(list(ActionKind))


@st.composite
def models(draw, max_thimacs=6):
    ids = draw(st.lists(idents, min_size=0, max_size=max_thimacs, unique=True))
    model = StaticModel(name=draw(st.one_of(idents, texts)))
    for i, ident in enumerate(ids):
        parent = draw(st.one_of(st.none(), st.sampled_from(ids[:i]))) if i else None
        actions = draw(st.frozensets(kinds))
        implicit = True if not actions else draw(st.booleans())
        name = draw(st.one_of(st.just(ident), texts))
        model.add_thimac(Thimac(ident, name, parent, actions, draw(st.booleans()), implicit))

    refs = model.action_refs() + [
        ActionRef(t.id, ActionKind.CREATE)
        for t in model.thimacs.values()
        if t.implicit_create and ActionKind.CREATE not in t.actions
    ]
    candidates = []
    for src in refs:
        for dst in refs:
            key = (src.kind, src.port, dst.kind, dst.port)
            if src.thimac == dst.thimac and key in INTRA_FLOWS:
                candidates.append((src, dst))
            elif src.thimac != dst.thimac and src.port is Port.OUT and dst.port is Port.IN:
                candidates.append((src, dst))
    if candidates:
        for src, dst in draw(st.lists(st.sampled_from(candidates), max_size=8)):
            model.add_flow(src, dst, draw(st.one_of(st.none(), texts)))
    cross = [(a, b) for a in refs for b in refs if a.thimac != b.thimac]
    if cross:
        for src, dst in draw(st.lists(st.sampled_from(cross), max_size=3)):
            model.add_trigger(src, dst)
    return model, refs


@st.composite
def documents(draw):
    model, refs = draw(models())
    events = []
    if refs:
        ids = draw(st.lists(idents, max_size=4, unique=True))
        for ident in ids:
            actions = draw(st.lists(st.sampled_from(refs), min_size=1, max_size=4, unique=True))
            consumes = draw(st.lists(st.sampled_from(sorted(model.thimacs)), max_size=2, unique=True))
            events.append(
                define_event(model, actions, draw(texts), consumes, draw(st.booleans()), event_id=ident)
            )
    schedule = []
    if events:
        for _ in range(draw(st.integers(0, 5))):
            schedule.append(
                ScheduleEntry(
                    draw(st.integers(0, 6)),
                    draw(st.sampled_from([e.id for e in events])),
                    draw(st.integers(1, 3)),
                )
            )
    return model, events, schedule
