import itertools

import pytest
from hypothesis import given, settings

from tmkit.core import (
    ActionKind,
    ActionRef,
    Port,
    Severity,
    StaticModel,
    Thimac,
    new_model,
    ref,
    validate,
)
from tmkit.core import FlowEdge, TriggerEdge
from tmkit.errors import (
    BoundaryViolation,
    DuplicateId,
    IllegalFlowPair,
    NestingCycle,
    SameThimacTrigger,
    UnknownAction,
    UnknownParent,
)

from .strategies import models

ALL = set(ActionKind)

# Legal pairs written out by hand, independent of tmkit.core's tables.
LEGAL_SAME = {
    ("create", "process"),
    ("create", "release"),
    ("receive", "process"),
    ("receive", "release"),
    ("process", "release"),
    ("transfer", "receive"),
    ("release", "transfer"),
}
LEGAL_CROSS = {("transfer", "transfer")}


def grammar_cases():
    for src, dst, scope in itertools.product(
        [k.value for k in ActionKind], [k.value for k in ActionKind], ["same", "cross"]
    ):
        legal = (src, dst) in (LEGAL_SAME if scope == "same" else LEGAL_CROSS)
        yield src, dst, scope, legal


def _port(kind, role, scope):
    if kind != "transfer":
        return None
    if scope == "cross":
        return Port.OUT if role == "src" else Port.IN
    return Port.IN if role == "src" else Port.OUT


def two_full_thimacs():
    model = new_model("grammar")
    model.add_thimac(Thimac("A", actions=ALL))
    model.add_thimac(Thimac("B", actions=ALL))
    return model


def test_grammar_table_has_fifty_cases():
    cases = list(grammar_cases())
    assert len(cases) == 50
    assert sum(legal for *_, legal in cases) == 8


@pytest.mark.parametrize("src,dst,scope,legal", list(grammar_cases()))
def test_flow_grammar_exhaustive(src, dst, scope, legal):
    model = two_full_thimacs()
    a = ActionRef("A", ActionKind(src), _port(src, "src", scope))
    b = ActionRef("A" if scope == "same" else "B", ActionKind(dst), _port(dst, "dst", scope))
    if legal:
        model.add_flow(a, b)
        assert validate(model) == []
    else:
        with pytest.raises((IllegalFlowPair, BoundaryViolation)):
            model.add_flow(a, b)
        model.flows.append(FlowEdge(a, b))
        codes = {d.code for d in validate(model)}
        assert codes & {"E-ILLEGAL-FLOW", "E-BOUNDARY"}


def test_cross_transfer_with_wrong_ports_is_illegal():
    model = two_full_thimacs()
    with pytest.raises(IllegalFlowPair):
        model.add_flow(ref("A.transfer.in"), ref("B.transfer.out"))


def test_new_model():
    assert new_model("D").thimacs == {} and new_model("D").flows == []
    empty = new_model("")
    assert empty.name == "" and not empty.thimacs


def test_action_ref_port_invariant():
    with pytest.raises(ValueError):
        ActionRef("X", ActionKind.TRANSFER)
    with pytest.raises(ValueError):
        ActionRef("X", ActionKind.CREATE, Port.IN)
    assert str(ref("X.transfer.out")) == "X.transfer.out"


def test_add_thimac_examples():
    model = new_model("D").add_thimac(Thimac("Canary", actions=ALL))
    assert len(model.thimacs) == 1
    with pytest.raises(NestingCycle):
        model.add_thimac(Thimac("X", parent="X"))
    with pytest.raises(DuplicateId):
        model.add_thimac(Thimac("Canary"))
    with pytest.raises(UnknownParent):
        model.add_thimac(Thimac("Y", parent="Nope"))


def test_subthimac_nesting_three_levels():
    model = new_model("land-parcels")
    model.add_thimac(Thimac("John"))
    model.add_thimac(Thimac("John_c", "c", "John"))
    model.add_thimac(Thimac("John_c_length", "length", "John_c", {ActionKind.CREATE}))
    assert model.ancestors("John_c_length") == ["John_c", "John"]
    assert [d for d, _ in model.walk()] == [0, 1, 2]


def test_implicit_create_defaults():
    assert Thimac("X").implicit_create is True
    assert Thimac("X", actions={ActionKind.PROCESS}).implicit_create is False


def test_add_flow_examples():
    model = new_model("D")
    model.add_thimac(Thimac("Canary", actions=ALL))
    model.add_thimac(Thimac("Sky", actions={ActionKind.TRANSFER, ActionKind.RECEIVE}))
    model.add_flow(ref("Canary.release"), ref("Canary.transfer.out"))
    model.add_flow(ref("Canary.transfer.out"), ref("Sky.transfer.in"))
    with pytest.raises(IllegalFlowPair):
        model.add_flow(ref("Canary.create"), ref("Canary.create"))
    with pytest.raises(BoundaryViolation):
        model.add_flow(ref("Canary.process"), ref("Sky.receive"))
    with pytest.raises(UnknownAction):
        model.add_flow(ref("Sky.release"), ref("Sky.transfer.out"))
    assert len(model.flows) == 2


def test_add_trigger_examples():
    model = new_model("D")
    for name in ("Shark", "Attack", "Smash", "Pile", "X"):
        model.add_thimac(Thimac(name, actions={ActionKind.CREATE, ActionKind.PROCESS}))
    model.add_trigger(ref("Shark.process"), ref("Attack.create"))
    model.add_trigger(ref("Smash.process"), ref("Pile.create"))
    with pytest.raises(SameThimacTrigger):
        model.add_trigger(ref("X.create"), ref("X.process"))
    assert len(model.triggers) == 2


def test_validate_empty_model():
    assert validate(new_model("")) == []


def test_validate_reports_illegal_flow_at_edge():
    model = new_model("M").add_thimac(Thimac("X", actions=ALL))
    model.flows.append(FlowEdge(ref("X.process"), ref("X.receive")))
    diagnostics = validate(model)
    assert [(d.code, d.location) for d in diagnostics] == [
        ("E-ILLEGAL-FLOW", "flow X.process -> X.receive")
    ]


def test_validate_no_origin_is_a_warning():
    model = new_model("M").add_thimac(Thimac("X", actions={ActionKind.PROCESS}))
    (diag,) = validate(model)
    assert diag.code == "W-NO-ORIGIN" and diag.severity is Severity.WARNING


def test_inbound_transfer_counts_as_origin():
    model = new_model("M")
    model.add_thimac(Thimac("A", actions={ActionKind.CREATE, ActionKind.RELEASE, ActionKind.TRANSFER}))
    model.add_thimac(Thimac("B", actions={ActionKind.TRANSFER, ActionKind.RECEIVE}))
    model.add_flow(ref("A.transfer.out"), ref("B.transfer.in"))
    assert validate(model) == []


def test_validate_catches_hand_built_problems():
    model = StaticModel("M")
    model.thimacs["A"] = Thimac("A", parent="B")
    model.thimacs["B"] = Thimac("B", parent="A")
    model.thimacs["C"] = Thimac("C", parent="Missing", actions=set(), implicit_create=False)
    model.thimacs["bad id"] = Thimac("bad id")
    model.triggers.append(TriggerEdge(ref("A.create"), ref("A.create")))
    model.flows.append(FlowEdge(ref("Z.create"), ref("A.process")))
    codes = sorted(d.code for d in validate(model))
    assert codes == sorted(
        [
            "E-NESTING-CYCLE",
            "E-NESTING-CYCLE",
            "E-UNKNOWN-PARENT",
            "E-EMPTY-THIMAC",
            "E-BAD-ID",
            "E-SAME-THIMAC-TRIGGER",
            "E-UNKNOWN-THIMAC",
            "E-UNKNOWN-ACTION",
            "W-NO-ORIGIN",
        ]
    )


def test_canary_corpus_validates(canary):
    assert validate(canary.model) == []


@settings(max_examples=150, deadline=None)
@given(models())
def test_random_models_are_forests_and_clean(generated):
    model, _ = generated
    diagnostics = validate(model)
    assert not [d for d in diagnostics if d.is_error]
    for thimac in model.thimacs.values():
        assert len(model.ancestors(thimac.id)) <= len(model.thimacs)
    # pure: a second run sees the same thing
    assert validate(model) == diagnostics
    # referential integrity
    for edge in model.flows + model.triggers:
        assert model.resolves(edge.src) and model.resolves(edge.dst)
