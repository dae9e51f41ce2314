import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmkit.core import ActionKind, Port, validate
from tmkit.dsl import parse, print_model
from tmkit.errors import ConflictingNesting, ImportFailure, UnknownEndpoint
from tmkit.importers import (
    Attribute,
    Entity,
    ErSchema,
    Relationship,
    Triple,
    import_er,
    import_triples,
    parse_er,
    parse_triples,
    thimac_id,
)

from .conftest import CORPUS


def cross_edges(model):
    return sorted(
        (f.src.thimac, f.dst.thimac, f.label)
        for f in model.flows
        if f.src.port is Port.OUT and f.dst.port is Port.IN
    )


def test_thimac_id():
    assert thimac_id("canary_2") == "Canary_2"
    assert thimac_id("sky") == "Sky"


def test_canaries_nest_in_canary():
    model = import_triples(
        [Triple("canary_1", "is_a", "canary"), Triple("canary_2", "is_a", "canary"), Triple("canary_3", "is_a", "canary")]
    )
    assert [c.id for c in model.children("Canary")] == ["Canary_1", "Canary_2", "Canary_3"]
    assert validate(model) == []


def test_can_a_builds_a_flow_chain():
    model = import_triples([Triple("canary_2", "can_a", "fly-to sky")])
    pairs = {(str(f.src), str(f.dst), f.label) for f in model.flows}
    assert pairs == {
        ("Canary_2.release", "Canary_2.transfer.out", None),
        ("Canary_2.transfer.out", "Sky.transfer.in", "fly"),
        ("Sky.transfer.in", "Sky.receive", None),
    }


def test_has_a_nests_the_object():
    model = import_triples([Triple("parcel", "has_a", "owner")])
    assert model.thimacs["Owner"].parent == "Parcel"


def test_empty_input():
    model = import_triples([])
    assert model.thimacs == {} and model.flows == []
    assert parse_triples("# only a comment\n\n") == []
    assert import_er(ErSchema()).thimacs == {}


def test_conflicting_nesting():
    with pytest.raises(ConflictingNesting):
        import_triples([Triple("a", "is_a", "b"), Triple("b", "is_a", "a")])
    with pytest.raises(ConflictingNesting):
        import_triples([Triple("a", "is_a", "b"), Triple("a", "is_a", "c")])
    with pytest.raises(ConflictingNesting):
        import_triples([Triple("a", "is_a", "b"), Triple("b", "is_a", "c"), Triple("c", "is_a", "a")])


def test_triples_syntax_errors_are_positioned():
    with pytest.raises(ImportFailure) as info:
        parse_triples("a is_a b\nlonely pair\n")
    assert (info.value.line, info.value.column) == (2, 1)
    with pytest.raises(ImportFailure) as info:
        parse_triples("a is_a b c\n")
    assert (info.value.line, info.value.column) == (1, 10)


def test_er_single_entity():
    model = import_er(ErSchema([Entity("Parcel", [Attribute("Owner")])]))
    owner = model.thimacs["Parcel_Owner"]
    assert owner.parent == "Parcel" and owner.name == "Owner" and owner.storage
    assert validate(model) == []


def test_er_unknown_endpoint():
    schema = ErSchema([Entity("A")], [Relationship("adjoins", ["A", "B"])])
    with pytest.raises(UnknownEndpoint):
        import_er(schema)


def test_er_syntax_errors_are_positioned():
    with pytest.raises(ImportFailure) as info:
        parse_er("entity A { x;\n  y z }")
    assert (info.value.line, info.value.column) == (2, 5)
    with pytest.raises(ImportFailure) as info:
        parse_er("relation R (A, B)")
    assert (info.value.line, info.value.column) == (1, 1)


def test_parcels_schema_three_levels_deep():
    model = import_er(parse_er((CORPUS / "parcels.er").read_text(encoding="utf-8")), "parcels")
    assert model.ancestors("John_c_length") == ["John_c", "John"]
    assert {"John", "Peter", "Paul", "Ann", "1st", "2nd"} == {t.id for t in model.roots()}
    edges = cross_edges(model)
    assert ("John", "Peter", "adjoins") in edges and ("Ann", "2nd", "fronts") in edges
    assert len(edges) == 7
    assert validate(model) == []


def test_birds_import_is_valid_and_round_trips():
    model = import_triples(parse_triples((CORPUS / "birds.triples").read_text(encoding="utf-8")), "birds")
    assert validate(model) == []
    assert parse(print_model(model)).model == model


names = st.from_regex(r"[a-z][a-z0-9]{0,4}(_[a-z0-9]{1,3})?", fullmatch=True)
relations = st.sampled_from(["is_a", "has_a", "can_a", "likes", "enters"])


@st.composite
def triple_lists(draw):
    out = []
    for _ in range(draw(st.integers(0, 10))):
        subject, obj, rel = draw(names), draw(names), draw(relations)
        if rel == "can_a":
            obj = f"{draw(names)}-to {obj}"
        out.append(Triple(subject, rel, obj))
    return out


@settings(max_examples=300, deadline=None)
@given(triple_lists())
def test_imports_validate_or_fail_cleanly(triples):
    try:
        model = import_triples(triples, "random")
    except ImportFailure:
        return
    assert not [d for d in validate(model) if d.is_error]
    # every mentioned name survives
    mentioned = {thimac_id(t.subject) for t in triples}
    assert mentioned <= set(model.thimacs)
    # deterministic
    assert print_model(import_triples(triples, "random")) == print_model(model)


attr_names = st.from_regex(r"[a-z][a-z0-9]{0,4}", fullmatch=True)


@st.composite
def schemas(draw):
    entities = []
    for name in draw(st.lists(st.from_regex(r"[A-Z][a-z]{0,4}", fullmatch=True), unique=True, max_size=5)):
        attrs = [Attribute(a) for a in draw(st.lists(attr_names, unique=True, max_size=3))]
        entities.append(Entity(name, attrs))
    rels = []
    if len(entities) >= 2:
        for _ in range(draw(st.integers(0, 4))):
            pair = draw(st.lists(st.sampled_from([e.name for e in entities]), min_size=2, max_size=2, unique=True))
            rels.append(Relationship(draw(attr_names), pair))
    return ErSchema(entities, rels)


@settings(max_examples=200, deadline=None)
@given(schemas())
def test_er_imports_validate(schema):
    model = import_er(schema, "random")
    assert not [d for d in validate(model) if d.is_error]
    for entity in schema.entities:
        for attr in entity.attributes:
            sub = model.thimacs[f"{entity.name}_{attr.name}"]
            assert sub.name == attr.name and ActionKind.CREATE in sub.actions
    assert len(cross_edges(model)) == len(schema.relationships)
