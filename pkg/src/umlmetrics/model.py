"""In-memory UML model graph.

A :class:`UmlModel` is built once from a flat list of :class:`ModelElement`
records and never changes afterwards.  Construction resolves every
cross-reference (quarantining the ones that point nowhere), checks the
structural invariants and precomputes the adjacency indices that the metric
modules traverse.
"""

from __future__ import annotations

import enum
from collections import defaultdict, deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Iterable, Iterator, Mapping

from .errors import InvalidModel, NotFound, WrongElementKind


class ElementKind(str, enum.Enum):
    PACKAGE = "Package"
    CLASS = "Class"
    INTERFACE = "Interface"
    ATTRIBUTE = "Attribute"
    OPERATION = "Operation"
    PARAMETER = "Parameter"
    ASSOCIATION = "Association"
    GENERALIZATION = "Generalization"
    INTERFACE_REALIZATION = "InterfaceRealization"
    DEPENDENCY = "Dependency"
    ACTOR = "Actor"
    USE_CASE = "UseCase"
    INCLUDE = "Include"
    EXTEND = "Extend"
    EXTENSION_POINT = "ExtensionPoint"
    STATE_MACHINE = "StateMachine"
    STATE = "State"
    TRANSITION = "Transition"
    TRIGGER = "Trigger"
    ACTIVITY = "Activity"
    ACTION = "Action"
    OBJECT_NODE = "ObjectNode"
    PIN = "Pin"
    CONTROL_FLOW = "ControlFlow"
    OBJECT_FLOW = "ObjectFlow"
    DECISION_NODE = "DecisionNode"
    CONTROL_NODE = "ControlNode"
    ACTIVITY_PARTITION = "ActivityPartition"
    EXCEPTION_HANDLER = "ExceptionHandler"
    INTERACTION = "Interaction"
    LIFELINE = "Lifeline"
    MESSAGE = "Message"

    def __str__(self) -> str:
        return self.value


K = ElementKind

CLASSIFIERS = frozenset({K.CLASS, K.INTERFACE})
BEHAVIORS = frozenset({K.ACTIVITY, K.STATE_MACHINE, K.INTERACTION})
FLOWS = frozenset({K.CONTROL_FLOW, K.OBJECT_FLOW})

# Value shapes for typed references:
#   "ref"  - one element id        "refs" - tuple of element ids
#   "text" - free text             "flag" - bool
_REF_SCHEMA: dict[ElementKind, dict[str, str]] = {
    K.PACKAGE: {},
    K.CLASS: {"abstract": "flag"},
    K.INTERFACE: {},
    K.ATTRIBUTE: {"type": "ref", "visibility": "text", "type_name": "text", "static": "flag"},
    K.OPERATION: {"visibility": "text", "method": "refs", "abstract": "flag", "static": "flag"},
    K.PARAMETER: {"type": "ref", "direction": "text", "type_name": "text"},
    K.ASSOCIATION: {"ends": "refs"},
    K.GENERALIZATION: {"specific": "ref", "general": "ref"},
    K.INTERFACE_REALIZATION: {"client": "ref", "contract": "ref"},
    K.DEPENDENCY: {"clients": "refs", "suppliers": "refs", "stereotype": "text"},
    K.ACTOR: {},
    K.USE_CASE: {},
    K.INCLUDE: {"including": "ref", "addition": "ref"},
    K.EXTEND: {"extension": "ref", "extended": "ref", "locations": "refs"},
    K.EXTENSION_POINT: {},
    K.STATE_MACHINE: {"specification": "ref"},
    K.STATE: {"pseudostate": "text", "entry": "flag", "exit": "flag", "do_activity": "flag"},
    K.TRANSITION: {"source": "ref", "target": "ref", "guard": "flag", "effect": "flag"},
    K.TRIGGER: {"event": "text"},
    K.ACTIVITY: {"specification": "ref"},
    K.ACTION: {"action_kind": "text"},
    K.OBJECT_NODE: {"type": "ref", "node_kind": "text"},
    K.PIN: {"type": "ref", "direction": "text"},
    K.CONTROL_FLOW: {"source": "ref", "target": "ref", "guard": "flag"},
    K.OBJECT_FLOW: {"source": "ref", "target": "ref", "guard": "flag"},
    K.DECISION_NODE: {},
    K.CONTROL_NODE: {"control": "text"},
    K.ACTIVITY_PARTITION: {"nodes": "refs"},
    K.EXCEPTION_HANDLER: {"handler_body": "ref", "exception_types": "refs"},
    K.INTERACTION: {"specification": "ref"},
    K.LIFELINE: {"represents": "ref"},
    K.MESSAGE: {"sender": "ref", "receiver": "ref", "signature": "ref", "sort": "text"},
}


class _Unavailable:
    """Metric value for "no behavioral evidence"; distinct from zero."""

    _instance: _Unavailable | None = None

    def __new__(cls) -> _Unavailable:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Unavailable"

    def __str__(self) -> str:
        return "n/a"

    def __bool__(self) -> bool:
        return False

    def __reduce__(self) -> str:
        return "Unavailable"


Unavailable = _Unavailable()


def is_available(value: Any) -> bool:
    return value is not Unavailable


@dataclass(frozen=True)
class ModelElement:
    """One node of the model graph.

    ``refs`` holds the kind-specific references and flags described by the
    schema for ``kind``; ``tags`` holds free-form tagged values (used for
    complexity annotations).
    """

    id: str
    kind: ElementKind
    name: str | None = None
    owner: str | None = None
    refs: Mapping[str, Any] = field(default_factory=dict)
    tags: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        kind = ElementKind(self.kind)
        object.__setattr__(self, "kind", kind)
        schema = _REF_SCHEMA[kind]
        clean: dict[str, Any] = {}
        for key, value in self.refs.items():
            shape = schema.get(key)
            if shape is None:
                raise InvalidModel(f"{kind} element {self.id!r} cannot carry reference {key!r}")
            if value is None:
                continue
            if shape == "refs":
                value = tuple(value)
            elif shape == "flag":
                value = bool(value)
            elif not isinstance(value, str):
                raise InvalidModel(f"reference {key!r} of {self.id!r} must be text")
            clean[key] = value
        object.__setattr__(self, "refs", MappingProxyType(clean))
        object.__setattr__(self, "tags", MappingProxyType(dict(self.tags)))

    @property
    def visibility(self) -> str:
        return self.refs.get("visibility", "public")

    def ref(self, key: str) -> str | None:
        return self.refs.get(key)

    def ref_list(self, key: str) -> tuple[str, ...]:
        return self.refs.get(key, ())

    def flag(self, key: str) -> bool:
        return bool(self.refs.get(key, False))

    def referenced_ids(self) -> Iterator[tuple[str, str]]:
        """Yield ``(role, target_id)`` for every id-valued reference."""
        schema = _REF_SCHEMA[self.kind]
        for key, value in self.refs.items():
            if schema[key] == "ref":
                yield key, value
            elif schema[key] == "refs":
                for target in value:
                    yield key, target

    def with_refs(self, **changes: Any) -> ModelElement:
        refs = dict(self.refs)
        refs.update(changes)
        return ModelElement(self.id, self.kind, self.name, self.owner, refs, self.tags)


@dataclass(frozen=True)
class UnresolvedRef:
    element: str
    role: str
    target: str
    reason: str = "missing"


def _freeze(groups: Mapping[str, list[str]]) -> Mapping[str, tuple[str, ...]]:
    return MappingProxyType({k: tuple(v) for k, v in groups.items()})


@dataclass(frozen=True)
class Indices:
    by_kind: Mapping[ElementKind, tuple[str, ...]]
    children: Mapping[str, tuple[str, ...]]
    generals: Mapping[str, tuple[str, ...]]
    specifics: Mapping[str, tuple[str, ...]]
    realizations: Mapping[str, tuple[str, ...]]
    associations: Mapping[str, tuple[str, ...]]
    dependencies_from: Mapping[str, tuple[str, ...]]
    dependencies_to: Mapping[str, tuple[str, ...]]
    transitions_from: Mapping[str, tuple[str, ...]]
    transitions_to: Mapping[str, tuple[str, ...]]
    flows_from: Mapping[str, tuple[str, ...]]
    messages_from: Mapping[str, tuple[str, ...]]
    messages_to: Mapping[str, tuple[str, ...]]
    lifelines_of: Mapping[str, tuple[str, ...]]
    behaviors_of: Mapping[str, tuple[str, ...]]

    def as_dict(self) -> dict[str, dict[Any, tuple[str, ...]]]:
        return {name: dict(getattr(self, name)) for name in self.__dataclass_fields__}


def build_indices(elements: Mapping[str, ModelElement]) -> Indices:
    """Derive every adjacency index from the element map alone."""
    groups: dict[str, defaultdict[Any, list[str]]] = {
        name: defaultdict(list) for name in Indices.__dataclass_fields__
    }

    def add(index: str, key: Any, value: str) -> None:
        bucket = groups[index][key]
        if value not in bucket:
            bucket.append(value)

    for el in elements.values():
        add("by_kind", el.kind, el.id)
        if el.owner is not None:
            add("children", el.owner, el.id)
        kind = el.kind
        if kind is K.GENERALIZATION:
            specific, general = el.ref("specific"), el.ref("general")
            if specific and general:
                add("generals", specific, general)
                add("specifics", general, specific)
        elif kind is K.INTERFACE_REALIZATION:
            if el.ref("client") and el.ref("contract"):
                add("realizations", el.ref("client"), el.ref("contract"))
        elif kind is K.ASSOCIATION:
            for end in el.ref_list("ends"):
                add("associations", end, el.id)
        elif kind is K.DEPENDENCY:
            for client in el.ref_list("clients"):
                add("dependencies_from", client, el.id)
            for supplier in el.ref_list("suppliers"):
                add("dependencies_to", supplier, el.id)
        elif kind is K.TRANSITION:
            if el.ref("source"):
                add("transitions_from", el.ref("source"), el.id)
            if el.ref("target"):
                add("transitions_to", el.ref("target"), el.id)
        elif kind in FLOWS:
            if el.ref("source"):
                add("flows_from", el.ref("source"), el.id)
        elif kind is K.MESSAGE:
            if el.ref("sender"):
                add("messages_from", el.ref("sender"), el.id)
            if el.ref("receiver"):
                add("messages_to", el.ref("receiver"), el.id)
        elif kind is K.LIFELINE:
            classifier = lifeline_classifier(elements, el)
            if classifier is not None:
                add("lifelines_of", classifier, el.id)
        elif kind is K.OPERATION:
            for behavior in el.ref_list("method"):
                add("behaviors_of", el.id, behavior)
        if kind in (K.ACTIVITY, K.STATE_MACHINE, K.INTERACTION) and el.ref("specification"):
            add("behaviors_of", el.ref("specification"), el.id)

    frozen = {name: _freeze(g) for name, g in groups.items()}
    return Indices(**frozen)


def lifeline_classifier(elements: Mapping[str, ModelElement], lifeline: ModelElement) -> str | None:
    """Class or interface a lifeline stands for, through a typed property if needed."""
    target = lifeline.ref("represents")
    seen = set()
    while target is not None and target not in seen:
        seen.add(target)
        el = elements.get(target)
        if el is None:
            return None
        if el.kind in CLASSIFIERS or el.kind is K.ACTOR:
            return el.id
        if el.kind is K.ATTRIBUTE:
            target = el.ref("type")
            continue
        return None
    return None


class UmlModel:
    """Immutable UML model with resolved references and adjacency indices.

    Elements whose references point to unknown ids keep the element; the
    dangling reference is removed from ``refs`` and recorded in
    ``unresolved_refs``.
    """

    def __init__(
        self,
        elements: Iterable[ModelElement],
        *,
        source: str = "<memory>",
        name: str | None = None,
        unresolved_refs: Iterable[UnresolvedRef] = (),
        foreign_ids: Iterable[str] = (),
        unrecognized: Mapping[str, int] | None = None,
    ):
        raw: dict[str, ModelElement] = {}
        for el in elements:
            if el.id in raw:
                raise InvalidModel(f"duplicate element id {el.id!r}")
            raw[el.id] = el
        foreign = frozenset(foreign_ids)
        quarantine = list(unresolved_refs)
        resolved: dict[str, ModelElement] = {}
        for el_id, el in raw.items():
            dropped: dict[str, Any] = {}
            for role, target in el.referenced_ids():
                if target not in raw:
                    reason = "foreign" if target in foreign else "missing"
                    quarantine.append(UnresolvedRef(el_id, role, target, reason))
                    dropped.setdefault(role, []).append(target)
            owner = el.owner
            if owner is not None and owner not in raw:
                quarantine.append(UnresolvedRef(el_id, "owner", owner,
                                                "foreign" if owner in foreign else "missing"))
                owner = None
            if dropped or owner != el.owner:
                refs = dict(el.refs)
                for role, targets in dropped.items():
                    current = refs[role]
                    if isinstance(current, tuple):
                        refs[role] = tuple(t for t in current if t not in targets)
                    else:
                        del refs[role]
                el = ModelElement(el.id, el.kind, el.name, owner, refs, el.tags)
            resolved[el_id] = el

        self.elements: Mapping[str, ModelElement] = MappingProxyType(resolved)
        self.containment: Mapping[str, str] = MappingProxyType(
            {el.id: el.owner for el in resolved.values() if el.owner is not None}
        )
        self.unresolved_refs: tuple[UnresolvedRef, ...] = tuple(quarantine)
        self.unrecognized: Mapping[str, int] = MappingProxyType(dict(unrecognized or {}))
        self.source = source
        self.name = name
        self._check_containment()
        self.indices = build_indices(self.elements)
        self._check_generalization_cycles()

    # -- invariants -----------------------------------------------------

    def _check_containment(self) -> None:
        done: set[str] = set()
        for start in self.containment:
            path: list[str] = []
            on_path: set[str] = set()
            node: str | None = start
            while node is not None and node not in done:
                if node in on_path:
                    cycle = path[path.index(node):] + [node]
                    raise InvalidModel("containment cycle: " + " -> ".join(cycle))
                on_path.add(node)
                path.append(node)
                node = self.containment.get(node)
            done.update(path)

    def _check_generalization_cycles(self) -> None:
        white, grey, black = 0, 1, 2
        color: dict[str, int] = defaultdict(int)
        generals = self.indices.generals
        for root in generals:
            if color[root] != white:
                continue
            stack: list[tuple[str, Iterator[str]]] = [(root, iter(generals.get(root, ())))]
            color[root] = grey
            while stack:
                node, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    color[node] = black
                    stack.pop()
                elif color[nxt] == grey:
                    path = [n for n, _ in stack]
                    cycle = path[path.index(nxt):] + [nxt]
                    names = [self.label(n) for n in cycle]
                    raise InvalidModel("generalization cycle: " + " -> ".join(names))
                elif color[nxt] == white:
                    color[nxt] = grey
                    stack.append((nxt, iter(generals.get(nxt, ()))))

    # -- lookup ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, element_id: object) -> bool:
        return element_id in self.elements

    def get(self, element_id: str, *kinds: ElementKind) -> ModelElement:
        try:
            el = self.elements[element_id]
        except KeyError:
            raise NotFound(element_id) from None
        if kinds and el.kind not in kinds:
            raise WrongElementKind(element_id, el.kind.value, "/".join(k.value for k in kinds))
        return el

    def of_kind(self, *kinds: ElementKind) -> list[ModelElement]:
        ids: list[str] = []
        for kind in kinds:
            ids.extend(self.indices.by_kind.get(kind, ()))
        return [self.elements[i] for i in ids]

    def children(self, element_id: str, *kinds: ElementKind) -> list[ModelElement]:
        out = [self.elements[c] for c in self.indices.children.get(element_id, ())]
        if kinds:
            out = [c for c in out if c.kind in kinds]
        return out

    def contents(self, element_id: str, *kinds: ElementKind) -> list[ModelElement]:
        """All transitively owned elements, depth first in document order."""
        out: list[ModelElement] = []
        stack = list(reversed(self.indices.children.get(element_id, ())))
        while stack:
            el = self.elements[stack.pop()]
            if not kinds or el.kind in kinds:
                out.append(el)
            stack.extend(reversed(self.indices.children.get(el.id, ())))
        return out

    def enclosing(self, element_id: str, *kinds: ElementKind) -> ModelElement | None:
        """Nearest strict owner of one of ``kinds``."""
        node = self.containment.get(element_id)
        while node is not None:
            el = self.elements[node]
            if el.kind in kinds:
                return el
            node = self.containment.get(node)
        return None

    def label(self, element_id: str) -> str:
        el = self.elements.get(element_id)
        if el is None or not el.name:
            return element_id
        return el.name

    def qualified_name(self, element_id: str) -> str:
        parts: list[str] = []
        node: str | None = element_id
        while node is not None:
            el = self.elements[node]
            parts.append(el.name or f"<{el.id}>")
            node = el.owner
        return "::".join(reversed(parts))

    @property
    def has_interactions(self) -> bool:
        return bool(self.indices.by_kind.get(K.INTERACTION))

    def lifeline_classifier(self, lifeline_id: str) -> str | None:
        return lifeline_classifier(self.elements, self.elements[lifeline_id])

    def attached_behaviors(self, operation_id: str) -> list[ModelElement]:
        return [self.elements[b] for b in self.indices.behaviors_of.get(operation_id, ())]

    # -- hierarchy ------------------------------------------------------

    def _hierarchy_filter(self, start: ModelElement, include_interfaces: bool | None):
        if include_interfaces is None:
            include_interfaces = start.kind is K.INTERFACE
        allowed = CLASSIFIERS if include_interfaces else frozenset({K.CLASS})
        return lambda el_id: self.elements[el_id].kind in allowed

    def ancestors(self, class_id: str, include_interfaces: bool | None = None) -> list[str]:
        """Transitive generalization targets, breadth first, each once.

        Interfaces are followed only when ``include_interfaces`` is true; the
        default follows them exactly when the start element is an interface.
        """
        start = self.get(class_id, *CLASSIFIERS)
        keep = self._hierarchy_filter(start, include_interfaces)
        return _bfs(class_id, self.indices.generals, keep)

    def descendants(self, class_id: str, include_interfaces: bool | None = None) -> set[str]:
        start = self.get(class_id, *CLASSIFIERS)
        keep = self._hierarchy_filter(start, include_interfaces)
        return set(_bfs(class_id, self.indices.specifics, keep))

    def parents(self, class_id: str, include_interfaces: bool | None = None) -> list[str]:
        start = self.get(class_id, *CLASSIFIERS)
        keep = self._hierarchy_filter(start, include_interfaces)
        return [g for g in self.indices.generals.get(class_id, ()) if keep(g)]

    def children_classes(self, class_id: str, include_interfaces: bool | None = None) -> list[str]:
        start = self.get(class_id, *CLASSIFIERS)
        keep = self._hierarchy_filter(start, include_interfaces)
        return [s for s in self.indices.specifics.get(class_id, ()) if keep(s)]

    def referenced_classes(self, class_id: str) -> set[str]:
        """Classifiers named by attribute types, parameter types and association ends."""
        self.get(class_id, *CLASSIFIERS)
        found: set[str] = set()
        for member in self.children(class_id, K.ATTRIBUTE, K.OPERATION):
            if member.kind is K.ATTRIBUTE:
                found.add(member.ref("type"))
            else:
                for param in self.children(member.id, K.PARAMETER):
                    found.add(param.ref("type"))
        for assoc_id in self.indices.associations.get(class_id, ()):
            found.update(self.elements[assoc_id].ref_list("ends"))
        return {
            c for c in found
            if c is not None and c != class_id and self.elements[c].kind in CLASSIFIERS
        }

    def message_target_classes(self, class_id: str) -> set[str]:
        """Classifiers receiving messages sent from this class's lifelines."""
        self.get(class_id, *CLASSIFIERS)
        found: set[str] = set()
        for lifeline in self.indices.lifelines_of.get(class_id, ()):
            for msg_id in self.indices.messages_from.get(lifeline, ()):
                msg = self.elements[msg_id]
                receiver = msg.ref("receiver")
                if receiver is not None:
                    found.add(self.lifeline_classifier(receiver))
                signature = msg.ref("signature")
                if signature is not None:
                    owner = self.elements[signature].owner
                    found.add(owner)
        return {
            c for c in found
            if c is not None and c != class_id and self.elements[c].kind in CLASSIFIERS
        }


def _bfs(start: str, edges: Mapping[str, tuple[str, ...]], keep) -> list[str]:
    seen = {start}
    order: list[str] = []
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for nxt in edges.get(node, ()):
            if nxt in seen or not keep(nxt):
                continue
            seen.add(nxt)
            order.append(nxt)
            queue.append(nxt)
    return order
