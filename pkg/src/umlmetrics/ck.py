"""Chidamber-Kemerer metrics computed on design models.

Class-diagram information gives WMC1, DIT, NOC and a static CBO.  Attached
behaviors (activities, state machines) refine WMC into WMC_cc, and
interactions supply the message evidence needed by RFC, the behavioral part
of CBO and the attribute-usage map behind LCOM.  Where that evidence is
missing RFC and LCOM report ``Unavailable`` rather than zero.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Mapping

from .model import CLASSIFIERS, ElementKind, UmlModel, Unavailable

K = ElementKind

# class id -> operation id -> attribute ids accessed by that operation
UsageMap = Mapping[str, Mapping[str, frozenset]]


@dataclass(frozen=True)
class CkRecord:
    class_id: str
    wmc1: int
    wmc_cc: int
    dit: int
    noc: int
    num_desc: int
    rfc: object
    rfc_static: int
    cbo: int
    lcom: object


def _class(model: UmlModel, class_id: str):
    return model.get(class_id, *CLASSIFIERS)


def _operations(model: UmlModel, class_id: str) -> list[str]:
    return [op.id for op in model.children(class_id, K.OPERATION)]


def wmc1(model: UmlModel, class_id: str) -> int:
    _class(model, class_id)
    return len(_operations(model, class_id))


def cyclomatic_of_behavior(model: UmlModel, behavior_id: str) -> int:
    """McCabe complexity as decision points + 1.

    A decision node (or choice/junction pseudostate) with ``n`` outgoing
    edges contributes ``n - 1`` decision points.
    """
    behavior = model.get(behavior_id, K.ACTIVITY, K.STATE_MACHINE)
    decisions = 0
    if behavior.kind is K.ACTIVITY:
        for node in model.contents(behavior_id, K.DECISION_NODE):
            out = len(model.indices.flows_from.get(node.id, ()))
            decisions += max(out - 1, 0)
    else:
        for state in model.contents(behavior_id, K.STATE):
            if state.ref("pseudostate") in ("choice", "junction"):
                out = len(model.indices.transitions_from.get(state.id, ()))
                decisions += max(out - 1, 0)
    return decisions + 1


def operation_complexity(model: UmlModel, operation_id: str) -> int:
    for behavior in model.attached_behaviors(operation_id):
        if behavior.kind in (K.ACTIVITY, K.STATE_MACHINE):
            return cyclomatic_of_behavior(model, behavior.id)
    return 1


def wmc_cc(model: UmlModel, class_id: str) -> int:
    _class(model, class_id)
    return sum(operation_complexity(model, op) for op in _operations(model, class_id))


def dit(model: UmlModel, class_id: str, include_interfaces: bool | None = None) -> int:
    """Longest generalization path from the class to a root."""
    _class(model, class_id)
    memo: dict[str, int] = {}

    def depth(node: str) -> int:
        if node not in memo:
            parents = model.parents(node, include_interfaces)
            memo[node] = 1 + max(map(depth, parents)) if parents else 0
        return memo[node]

    return depth(class_id)


def noc(model: UmlModel, class_id: str, include_interfaces: bool | None = None) -> tuple[int, int]:
    """Immediate children and all descendants."""
    children = model.children_classes(class_id, include_interfaces)
    return len(children), len(model.descendants(class_id, include_interfaces))


def _sent_signatures(model: UmlModel, class_id: str) -> set[str]:
    found = set()
    for lifeline in model.indices.lifelines_of.get(class_id, ()):
        for msg_id in model.indices.messages_from.get(lifeline, ()):
            signature = model.elements[msg_id].ref("signature")
            if signature is not None and model.elements[signature].kind is K.OPERATION:
                found.add(signature)
    return found


def rfc(model: UmlModel, class_id: str):
    """Owned operations plus distinct operations invoked from the class's lifelines.

    Returns ``Unavailable`` for models without interactions; use
    :func:`rfc_static` for the class-diagram-only fallback.
    """
    _class(model, class_id)
    if not model.has_interactions:
        return Unavailable
    return len(set(_operations(model, class_id)) | _sent_signatures(model, class_id))


def rfc_static(model: UmlModel, class_id: str) -> int:
    return wmc1(model, class_id)


def cbo(model: UmlModel, class_id: str) -> int:
    return len(model.referenced_classes(class_id) | model.message_target_classes(class_id))


_ACCESSOR = re.compile(r"^(?:get|set|is|has)_?(?P<attr>\w+)$", re.IGNORECASE)


def accessed_attribute(op_name: str | None, attributes: Mapping[str, str]) -> str | None:
    """Attribute id whose accessor ``op_name`` is, given ``{lowercase name: id}``."""
    if not op_name:
        return None
    match = _ACCESSOR.match(op_name)
    if match is None:
        return None
    return attributes.get(match.group("attr").lower())


def derive_usage_map(model: UmlModel) -> dict[str, dict[str, frozenset]]:
    """Collect operation-to-attribute access evidence.

    Two sources are merged:

    * a dependency whose client is an operation and whose supplier is an
      attribute of the operation's class or of one of its ancestors;
    * a self-message (sender and receiver represent the same class) whose
      signature is an accessor (``getX``/``setX``/``isX``/``hasX``) of an
      attribute of that class.  The accessor accesses the attribute, and so
      does the operation the interaction specifies, if it belongs to the
      class.
    """
    usage: dict[str, dict[str, set]] = {}

    def visible_attributes(class_id: str) -> dict[str, str]:
        owners = [class_id] + model.ancestors(class_id, include_interfaces=True)
        return {a.id: owner for owner in owners for a in model.children(owner, K.ATTRIBUTE)}

    def record(class_id: str, op_id: str, attr_id: str) -> None:
        usage.setdefault(class_id, {}).setdefault(op_id, set()).add(attr_id)

    for dep in model.of_kind(K.DEPENDENCY):
        for client in dep.ref_list("clients"):
            op = model.elements[client]
            if op.kind is not K.OPERATION or op.owner is None:
                continue
            if model.elements[op.owner].kind not in CLASSIFIERS:
                continue
            allowed = visible_attributes(op.owner)
            for supplier in dep.ref_list("suppliers"):
                if supplier in allowed:
                    record(op.owner, op.id, supplier)

    for msg in model.of_kind(K.MESSAGE):
        sender, receiver, signature = msg.ref("sender"), msg.ref("receiver"), msg.ref("signature")
        if sender is None or receiver is None or signature is None:
            continue
        cls = model.lifeline_classifier(sender)
        if cls is None or cls != model.lifeline_classifier(receiver):
            continue
        if model.elements[cls].kind not in CLASSIFIERS:
            continue
        op = model.elements[signature]
        if op.kind is not K.OPERATION:
            continue
        names = {}
        for attr_id, _ in visible_attributes(cls).items():
            name = model.elements[attr_id].name
            if name:
                names.setdefault(name.lower(), attr_id)
        attr = accessed_attribute(op.name, names)
        if attr is None:
            continue
        if op.owner == cls:
            record(cls, op.id, attr)
        interaction = model.enclosing(msg.id, K.INTERACTION)
        spec = interaction.ref("specification") if interaction is not None else None
        if spec is not None and model.elements[spec].owner == cls:
            record(cls, spec, attr)

    return {c: {op: frozenset(a) for op, a in ops.items()} for c, ops in usage.items()}


def lcom(model: UmlModel, class_id: str, usage: UsageMap):
    """LCOM1: disjoint pairs minus intersecting pairs, floored at zero."""
    _class(model, class_id)
    ops = _operations(model, class_id)
    if len(ops) < 2:
        return 0
    evidence = usage.get(class_id)
    if not evidence:
        return Unavailable
    disjoint = sharing = 0
    for a, b in itertools.combinations(ops, 2):
        if evidence.get(a, frozenset()) & evidence.get(b, frozenset()):
            sharing += 1
        else:
            disjoint += 1
    return max(disjoint - sharing, 0)


def ck_record(model: UmlModel, class_id: str, usage: UsageMap | None = None) -> CkRecord:
    if usage is None:
        usage = derive_usage_map(model)
    children, desc = noc(model, class_id)
    return CkRecord(
        class_id=class_id,
        wmc1=wmc1(model, class_id),
        wmc_cc=wmc_cc(model, class_id),
        dit=dit(model, class_id),
        noc=children,
        num_desc=desc,
        rfc=rfc(model, class_id),
        rfc_static=rfc_static(model, class_id),
        cbo=cbo(model, class_id),
        lcom=lcom(model, class_id, usage),
    )


def ck_suite(model: UmlModel) -> list[CkRecord]:
    usage = derive_usage_map(model)
    return [ck_record(model, c.id, usage) for c in model.of_kind(K.CLASS)]


__all__ = [
    "CkRecord",
    "UsageMap",
    "cbo",
    "ck_record",
    "ck_suite",
    "cyclomatic_of_behavior",
    "derive_usage_map",
    "dit",
    "lcom",
    "noc",
    "rfc",
    "rfc_static",
    "wmc1",
    "wmc_cc",
]
