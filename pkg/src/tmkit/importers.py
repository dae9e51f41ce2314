"""Translate semantic-network triples and ER schemas into TM static models.

Triples (one per line, ``#`` comments)::

    canary_2 is_a canary          # Canary_2 nested inside Canary
    bird has_a wing               # Wing nested inside Bird
    bird can_a fly-to sky         # flow chain Bird -> Sky labelled "fly"
    shark attacks human           # flow chain Shark -> Human labelled "attacks"

ER schemas::

    entity John { Owner; c { length; endpoints } }
    entity 1st { side; width }
    rel fronts (John, 1st)

Entities become thimacs, attributes become storage subthimacs holding a
create action, and relationships become labelled transfer-to-transfer flows.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import ActionKind, ActionRef, FlowEdge, Port, StaticModel, Thimac
from .errors import ConflictingNesting, ImportFailure, ModelError, UnknownEndpoint

IS_A = "is_a"
HAS_A = "has_a"
CAN_A = "can_a"

_NAME_RE = re.compile(r"[A-Za-z0-9_]+\Z")


@dataclass(frozen=True)
class Triple:
    subject: str
    relation: str
    object: str

    def __post_init__(self):
        if not (self.subject and self.relation and self.object):
            raise ValueError("triple parts must be nonempty")


def thimac_id(name: str) -> str:
    """``canary_2`` -> ``Canary_2``; every underscore-separated part capitalized."""
    return "_".join(part[:1].upper() + part[1:] for part in name.split("_"))


def _verb(triple: Triple) -> tuple[str, str]:
    """Return (label, target) for a behavioural triple."""
    if triple.relation != CAN_A:
        return triple.relation, triple.object
    parts = triple.object.split()
    if len(parts) != 2:
        raise ImportFailure(f"can_a needs '<verb> <target>', got {triple.object!r}")
    verb, target = parts
    return verb.split("-", 1)[0], target


def parse_triples(text: str) -> list[Triple]:
    triples = []
    for number, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        parts = body.split()
        if not parts:
            continue
        if len(parts) < 3:
            raise ImportFailure("expected 'subject relation object'", number, 1)
        subject, relation, rest = parts[0], parts[1], parts[2:]
        if relation != CAN_A and len(rest) != 1:
            raise ImportFailure(f"{relation!r} takes exactly one object", number, body.index(rest[1]) + 1)
        if relation == CAN_A and len(rest) != 2:
            raise ImportFailure("can_a expects '<verb> <target>'", number, body.index(relation) + 1)
        names = [subject, rest[-1]]
        for name in names:
            if not _NAME_RE.match(name):
                raise ImportFailure(f"bad name {name!r}", number, body.index(name) + 1)
        triples.append(Triple(subject, relation, " ".join(rest)))
    return triples


def _chain(model: StaticModel, src: str, dst: str, label: str, seen: set):
    """Add release -> transfer(out) -> transfer(in) -> receive between two thimacs."""
    edges = [
        FlowEdge(ActionRef(src, ActionKind.RELEASE), ActionRef(src, ActionKind.TRANSFER, Port.OUT)),
        FlowEdge(ActionRef(src, ActionKind.TRANSFER, Port.OUT), ActionRef(dst, ActionKind.TRANSFER, Port.IN), label),
        FlowEdge(ActionRef(dst, ActionKind.TRANSFER, Port.IN), ActionRef(dst, ActionKind.RECEIVE)),
    ]
    for edge in edges:
        key = edge.sort_key()
        if key not in seen:
            seen.add(key)
            model.add_flow(edge.src, edge.dst, edge.label)


def _add_in_order(model, order, parents, actions):
    """Add thimacs so every parent precedes its children; ties keep ``order``."""
    added = set()

    def add(name, visiting):
        if name in added:
            return
        if name in visiting:
            raise ConflictingNesting(f"nesting cycle among {', '.join(sorted(visiting))}")
        parent = parents.get(name)
        if parent is not None:
            add(parent, visiting | {name})
        model.add_thimac(Thimac(name, None, parent, frozenset(actions.get(name, ())), False, True))
        added.add(name)

    for name in order:
        add(name, frozenset())


def import_triples(triples, name: str = "") -> StaticModel:
    """Build a static model from (subject, relation, object) triples.

    ``is_a`` nests the subject in the object, ``has_a`` nests the object in
    the subject, any other relation becomes a labelled flow chain from the
    subject to the object. Every name gets an implicitly creatable thimac.
    """
    order: list[str] = []
    parents: dict[str, str] = {}
    actions: dict[str, set] = {}
    chains = []

    def mention(raw):
        ident = thimac_id(raw)
        if ident not in actions:
            order.append(ident)
            actions[ident] = set()
        return ident

    for triple in triples:
        subject = mention(triple.subject)
        if triple.relation in (IS_A, HAS_A):
            obj = mention(triple.object)
            child, parent = (subject, obj) if triple.relation == IS_A else (obj, subject)
            if child == parent:
                raise ConflictingNesting(f"{child} cannot contain itself")
            if parents.get(parent) == child:
                raise ConflictingNesting(f"{child} and {parent} are nested both ways")
            if parents.get(child, parent) != parent:
                raise ConflictingNesting(f"{child} is nested in both {parents[child]} and {parent}")
            parents[child] = parent
        else:
            label, target = _verb(triple)
            obj = mention(target)
            if obj == subject:
                raise ImportFailure(f"{subject} {triple.relation} itself: a flow needs two thimacs")
            actions[subject] |= {ActionKind.RELEASE, ActionKind.TRANSFER}
            actions[obj] |= {ActionKind.TRANSFER, ActionKind.RECEIVE}
            chains.append((subject, obj, label))

    model = StaticModel(name=name)
    _add_in_order(model, order, parents, actions)
    seen: set = set()
    for subject, obj, label in chains:
        _chain(model, subject, obj, label, seen)
    return model


# -- ER ------------------------------------------------------------------------


@dataclass
class Attribute:
    name: str
    children: list = field(default_factory=list)


@dataclass
class Entity:
    name: str
    attributes: list = field(default_factory=list)


@dataclass
class Relationship:
    name: str
    endpoints: list = field(default_factory=list)


@dataclass
class ErSchema:
    entities: list = field(default_factory=list)
    relationships: list = field(default_factory=list)


_ER_TOKEN = re.compile(r"\s+|#[^\n]*|[A-Za-z0-9_]+|[{};(),]|.", re.S)


def parse_er(text: str) -> ErSchema:
    """Parse ``entity NAME { attr; attr { sub } }`` and ``rel NAME (A, B)`` text."""
    tokens = []
    line, col = 1, 1
    for match in _ER_TOKEN.finditer(text):
        chunk = match.group()
        if not chunk.isspace() and not chunk.startswith("#"):
            tokens.append((chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
    tokens.append(("", line, col))
    pos = 0

    def fail(message):
        _, ln, cl = tokens[pos]
        raise ImportFailure(message, ln, cl)

    def take(expected=None):
        nonlocal pos
        text_, _, _ = tokens[pos]
        if expected is not None and text_ != expected:
            fail(f"expected {expected!r}, found {text_ or 'end of input'!r}")
        if not text_:
            fail("unexpected end of input")
        pos += 1
        return text_

    def name():
        text_ = take()
        if not _NAME_RE.match(text_):
            pos_back()
            fail(f"expected a name, found {text_!r}")
        return text_

    def pos_back():
        nonlocal pos
        pos -= 1

    def attributes():
        items = []
        take("{")
        while tokens[pos][0] != "}":
            attr = Attribute(name())
            if tokens[pos][0] == "{":
                attr.children = attributes()
            items.append(attr)
            if tokens[pos][0] == ";":
                take(";")
            elif tokens[pos][0] != "}":
                fail(f"expected ';' or '}}', found {tokens[pos][0] or 'end of input'!r}")
        take("}")
        return items

    schema = ErSchema()
    while tokens[pos][0]:
        keyword = take()
        if keyword == "entity":
            entity = Entity(name())
            entity.attributes = attributes() if tokens[pos][0] == "{" else []
            schema.entities.append(entity)
        elif keyword == "rel":
            rel = Relationship(name())
            take("(")
            rel.endpoints.append(name())
            while tokens[pos][0] == ",":
                take(",")
                rel.endpoints.append(name())
            take(")")
            schema.relationships.append(rel)
        else:
            pos_back()
            fail(f"expected 'entity' or 'rel', found {keyword!r}")
    return schema


def import_er(schema: ErSchema, name: str = "") -> StaticModel:
    """Build a static model from an ER schema.

    Attribute subthimacs are named ``<owner>_<attribute>`` to keep ids unique
    while their display name stays the bare attribute name.
    """
    declared = [e.name for e in schema.entities]
    if len(set(declared)) != len(declared):
        raise ImportFailure("entity declared twice")
    for rel in schema.relationships:
        if len(rel.endpoints) < 2:
            raise ImportFailure(f"relationship {rel.name} needs at least two endpoints")
        for endpoint in rel.endpoints:
            if endpoint not in declared:
                raise UnknownEndpoint(f"relationship {rel.name} names unknown entity {endpoint!r}")

    try:
        return _build_er(schema, name)
    except ModelError as exc:
        raise ImportFailure(str(exc)) from exc


def _build_er(schema, name):
    linked = {e for rel in schema.relationships for e in rel.endpoints}
    model = StaticModel(name=name)
    for entity in schema.entities:
        actions = {ActionKind.TRANSFER} if entity.name in linked else set()
        model.add_thimac(Thimac(entity.name, actions=actions, implicit_create=True))
        stack = [(entity.name, attr) for attr in entity.attributes]
        while stack:
            owner, attr = stack.pop(0)
            ident = f"{owner}_{attr.name}"
            model.add_thimac(
                Thimac(ident, attr.name, owner, {ActionKind.CREATE}, storage=True, implicit_create=False)
            )
            stack[0:0] = [(ident, child) for child in attr.children]

    for rel in schema.relationships:
        first, *others = rel.endpoints
        for other in others:
            model.add_flow(
                ActionRef(first, ActionKind.TRANSFER, Port.OUT),
                ActionRef(other, ActionKind.TRANSFER, Port.IN),
                rel.name,
            )
    return model
