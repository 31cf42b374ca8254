"""Brute-force re-derivations of every built-in metric.

Oracles work on the raw record lists emitted by ``XmiBuilder`` (plain dicts,
no indices, no shared code with the package) and on raw XML via XPath.
They favour obviousness over speed: every query is a linear scan, DIT is
computed by enumerating all inheritance paths, and closures are fixed points.
"""

from __future__ import annotations

import itertools
import re
from collections import Counter

from lxml import etree

NA = "n/a"

DEFAULT_RESPONSIBILITY = {"public": 1.0, "protected": 0.5, "package": 0.5, "private": 0.25}
DEFAULT_DEPENDENCY = {"association": 1.0, "dependency": 0.5, "generalization": 0.0,
                      "realization": 0.0}
DEFAULT_UC4 = (1.0, 0.0, 1.0)


class Raw:
    """A record list with dangling references stripped, as the model sees it."""

    def __init__(self, records: list[dict]):
        ids = {r["id"] for r in records}
        self.records = []
        for r in records:
            r = dict(r)
            for key in ("type", "general", "contract", "client", "supplier", "addition",
                        "extended", "specification", "represents", "signature", "source",
                        "target"):
                if r.get(key) is not None and r[key] not in ids:
                    r[key] = None
            if "ends" in r:
                r["ends"] = [e for e in r["ends"] if e in ids]
            self.records.append(r)
        self.ids = ids

    def get(self, el_id):
        for r in self.records:
            if r["id"] == el_id:
                return r
        return None

    def kind(self, el_id):
        r = self.get(el_id)
        return r["kind"] if r else None

    def of(self, *kinds):
        return [r for r in self.records if r["kind"] in kinds]

    def owned(self, owner, *kinds):
        return [r for r in self.records if r["owner"] == owner and r["kind"] in kinds]


# -- hierarchy ------------------------------------------------------------------

def _class_parents(raw: Raw, c: str) -> list[str]:
    return [g["general"] for g in raw.of("Generalization")
            if g["specific"] == c and g["general"] is not None and raw.kind(g["general"]) == "Class"]


def _paths_to_root(raw: Raw, c: str) -> list[list[str]]:
    parents = _class_parents(raw, c)
    if not parents:
        return [[c]]
    return [[c] + p for parent in parents for p in _paths_to_root(raw, parent)]


def dit(raw: Raw, c: str) -> int:
    return max(len(p) - 1 for p in _paths_to_root(raw, c))


def ancestors(raw: Raw, c: str) -> set[str]:
    found: set[str] = set()
    while True:
        nxt = set(_class_parents(raw, c))
        for a in found:
            nxt |= set(_class_parents(raw, a))
        if nxt <= found:
            return found
        found |= nxt


def descendants(raw: Raw, c: str) -> set[str]:
    return {x["id"] for x in raw.of("Class") if c in ancestors(raw, x["id"])}


def noc(raw: Raw, c: str) -> int:
    return len({g["specific"] for g in raw.of("Generalization")
                if g["general"] == c and raw.kind(g["specific"]) == "Class"})


# -- class metrics --------------------------------------------------------------

def num_attr(raw, c):
    return len(raw.owned(c, "Attribute"))


def num_ops(raw, c):
    return len(raw.owned(c, "Operation"))


def num_inh_attr(raw, c):
    return sum(num_attr(raw, a) for a in ancestors(raw, c))


def num_interfaces(raw, c):
    return len({r["contract"] for r in raw.of("InterfaceRealization")
                if r["client"] == c and raw.kind(r["contract"]) == "Interface"})


def _decisions_activity(raw, act):
    total = 0
    for d in raw.owned(act, "DecisionNode"):
        out = sum(1 for f in raw.of("ControlFlow", "ObjectFlow") if f["source"] == d["id"])
        total += max(out - 1, 0)
    return total + 1


def _decisions_statemachine(raw, sm):
    total = 0
    for s in raw.owned(sm, "State"):
        if s["pseudostate"] in ("choice", "junction"):
            out = sum(1 for t in raw.of("Transition") if t["source"] == s["id"])
            total += max(out - 1, 0)
    return total + 1


def cc(raw, behavior):
    if raw.kind(behavior) == "Activity":
        return _decisions_activity(raw, behavior)
    return _decisions_statemachine(raw, behavior)


def wmc_cc(raw, c):
    total = 0
    for op in raw.owned(c, "Operation"):
        attached = [b for b in raw.of("Activity", "StateMachine") if b["specification"] == op["id"]]
        total += cc(raw, attached[0]["id"]) if attached else 1
    return total


def _lifeline_class(raw, lifeline_id):
    target = raw.get(lifeline_id)["represents"]
    while target is not None:
        kind = raw.kind(target)
        if kind in ("Class", "Interface", "Actor"):
            return target
        if kind == "Attribute":
            target = raw.get(target)["type"]
            continue
        return None
    return None


def _messages_sent_by(raw, c):
    return [m for m in raw.of("Message") if m["sender"] is not None
            and _lifeline_class(raw, m["sender"]) == c]


def rfc(raw, c):
    if not raw.of("Interaction"):
        return NA
    own = {op["id"] for op in raw.owned(c, "Operation")}
    sent = {m["signature"] for m in _messages_sent_by(raw, c)
            if m["signature"] is not None and raw.kind(m["signature"]) == "Operation"}
    return len(own | sent)


def _static_refs(raw, c):
    found = set()
    for a in raw.owned(c, "Attribute"):
        found.add(a["type"])
    for op in raw.owned(c, "Operation"):
        for p in raw.owned(op["id"], "Parameter"):
            found.add(p["type"])
    for assoc in raw.of("Association"):
        if c in assoc["ends"]:
            found.update(assoc["ends"])
    return {x for x in found if x is not None and x != c and raw.kind(x) in ("Class", "Interface")}


def cl5(raw, c):
    return len(_static_refs(raw, c))


def cbo(raw, c):
    found = set(_static_refs(raw, c))
    for m in _messages_sent_by(raw, c):
        if m["receiver"] is not None:
            found.add(_lifeline_class(raw, m["receiver"]))
        if m["signature"] is not None:
            found.add(raw.get(m["signature"])["owner"])
    return len({x for x in found if x is not None and x != c
                and raw.kind(x) in ("Class", "Interface")})


_ACCESSOR = re.compile(r"^(?:get|set|is|has)_?(\w+)$", re.IGNORECASE)


def usage_pairs(raw) -> set[tuple[str, str, str]]:
    """(class, operation, attribute) access evidence."""
    pairs = set()

    def visible(c):
        owners = {c} | _all_ancestors_incl_interfaces(raw, c)
        return {a["id"] for o in owners for a in raw.owned(o, "Attribute")}

    for d in raw.of("Dependency"):
        op = raw.get(d["client"]) if d["client"] else None
        if op is None or op["kind"] != "Operation" or d["supplier"] is None:
            continue
        c = op["owner"]
        if raw.kind(c) in ("Class", "Interface") and d["supplier"] in visible(c):
            pairs.add((c, op["id"], d["supplier"]))
    for m in raw.of("Message"):
        if m["sender"] is None or m["receiver"] is None or m["signature"] is None:
            continue
        c = _lifeline_class(raw, m["sender"])
        if c is None or c != _lifeline_class(raw, m["receiver"]):
            continue
        if raw.kind(c) not in ("Class", "Interface"):
            continue
        op = raw.get(m["signature"])
        if op["kind"] != "Operation":
            continue
        match = _ACCESSOR.match(op["name"] or "")
        if not match:
            continue
        attr = None
        for a_id in sorted(visible(c), key=lambda i: [r["id"] for r in raw.records].index(i)):
            name = raw.get(a_id)["name"]
            if name and name.lower() == match.group(1).lower():
                attr = a_id
                break
        if attr is None:
            continue
        if op["owner"] == c:
            pairs.add((c, op["id"], attr))
        inter = raw.get(m["owner"])
        spec = inter.get("specification") if inter else None
        if spec is not None and raw.get(spec)["owner"] == c:
            pairs.add((c, spec, attr))
    return pairs


def _all_ancestors_incl_interfaces(raw, c):
    found = set()
    frontier = {c}
    while frontier:
        nxt = {g["general"] for g in raw.of("Generalization")
               if g["specific"] in frontier and g["general"] is not None}
        nxt -= found | {c}
        found |= nxt
        frontier = nxt
    return found


def lcom(raw, c):
    ops = [op["id"] for op in raw.owned(c, "Operation")]
    if len(ops) < 2:
        return 0
    evidence = [p for p in usage_pairs(raw) if p[0] == c]
    if not evidence:
        return NA
    uses = {op: {a for cls, o, a in evidence if o == op} for op in ops}
    p = q = 0
    for x, y in itertools.combinations(ops, 2):
        if uses[x] & uses[y]:
            q += 1
        else:
            p += 1
    return max(p - q, 0)


def cl1(raw, c, weights=DEFAULT_RESPONSIBILITY):
    return sum(weights[m["visibility"]] for m in raw.owned(c, "Attribute", "Operation"))


def cl2(raw, c, weights=DEFAULT_DEPENDENCY):
    total = 0.0
    total += weights["association"] * sum(1 for a in raw.of("Association") if c in a["ends"])
    total += weights["dependency"] * sum(1 for d in raw.of("Dependency") if d["client"] == c)
    total += weights["generalization"] * sum(
        1 for g in raw.of("Generalization") if g["specific"] == c and g["general"] is not None)
    total += weights["realization"] * sum(
        1 for r in raw.of("InterfaceRealization") if r["client"] == c and r["contract"] is not None)
    return total


# -- packages and model ---------------------------------------------------------

def package_of(raw, el_id):
    r = raw.get(el_id)
    owner = r["owner"] if r else None
    while owner is not None:
        o = raw.get(owner)
        if o is None:
            return None
        if o["kind"] == "Package":
            return o["id"]
        owner = o["owner"]
    return None


def relation_pairs(raw):
    """(source, target) of every binary class-level relation."""
    out = []
    for a in raw.of("Association"):
        if len(a["ends"]) >= 2:
            out.append((a["ends"][0], a["ends"][1]))
    for g in raw.of("Generalization"):
        if g["general"] is not None:
            out.append((g["specific"], g["general"]))
    for r in raw.of("InterfaceRealization"):
        if r["contract"] is not None:
            out.append((r["client"], r["contract"]))
    for d in raw.of("Dependency"):
        if d["client"] is not None and d["supplier"] is not None:
            out.append((d["client"], d["supplier"]))
    return out


def cross_pairs(raw):
    return [(package_of(raw, s), package_of(raw, t)) for s, t in relation_pairs(raw)
            if package_of(raw, s) != package_of(raw, t)]


def pk1(raw, p):
    return len(raw.owned(p, "Class"))


def pk2(raw, p):
    return sum(cl1(raw, c["id"]) for c in raw.owned(p, "Class"))


def pk3(raw, p):
    return sum(1 for src, _ in cross_pairs(raw) if src == p)


def communications(raw):
    links = []
    for a in raw.of("Association"):
        for x in a["ends"]:
            for y in a["ends"]:
                if raw.kind(x) == "Actor" and raw.kind(y) == "UseCase":
                    links.append((x, y))
    return links


def model_metrics(raw, uc4=DEFAULT_UC4):
    links = communications(raw)
    uc1 = len(raw.of("UseCase"))
    uc2 = len(links)
    uc3 = len(set(links))
    return {
        "NC": len(raw.of("Class")),
        "NP": len(raw.of("Package")),
        "PKX": len(cross_pairs(raw)),
        "NA": len(raw.of("Actor")),
        "UC1": uc1, "UC2": uc2, "UC3": uc3,
        "UC4": uc4[0] * uc1 + uc4[1] * uc2 + uc4[2] * uc3,
    }


# -- behavior -------------------------------------------------------------------

def statechart(raw, sm):
    vertices = raw.owned(sm, "State")
    real = [v for v in vertices if v["pseudostate"] is None]
    transitions = raw.owned(sm, "Transition")
    return {
        "States": len(real),
        "RawStates": len(vertices),
        "TTrigger": sum(t["triggers"] for t in transitions),
        "TGuard": sum(1 for t in transitions if t["guard"]),
        "TEffects": sum(1 for t in transitions if t["effect"]),
        "EntryActions": sum(1 for s in real if s["entry"]),
        "ExitActions": sum(1 for s in real if s["exit"]),
        "Transitions": len(transitions),
        "Activities": sum(1 for s in real if s["do"]),
    }


def activity(raw, act):
    actions = raw.owned(act, "Action")
    flows = raw.owned(act, "ControlFlow", "ObjectFlow")
    return {
        "Actions": len(actions),
        "ObjectNodes": len(raw.owned(act, "ObjectNode")),
        "Pins": sum(len(raw.owned(a["id"], "Pin")) for a in actions),
        "Guards": sum(1 for f in flows if f["guard"]),
        "Partitions": len(raw.owned(act, "ActivityPartition")),
        "ObjectFlows": len(raw.owned(act, "ObjectFlow")),
        "ExceptionHandlers": sum(len(raw.owned(a["id"], "ExceptionHandler")) for a in actions),
        "CC": cc(raw, act),
    }


# -- dispatch --------------------------------------------------------------------

CLASS_ORACLES = {
    "NumAttr": num_attr,
    "NumOps": num_ops,
    "NumInhAttr": num_inh_attr,
    "NumAnc": lambda raw, c: len(ancestors(raw, c)),
    "NumDesc": lambda raw, c: len(descendants(raw, c)),
    "NumInterfaces": num_interfaces,
    "WMC1": num_ops,
    "WMC_cc": wmc_cc,
    "DIT": dit,
    "NOC": noc,
    "RFC": rfc,
    "CBO": cbo,
    "LCOM": lcom,
    "CL1": cl1,
    "CL2": cl2,
    "CL3": dit,
    "CL4": noc,
    "CL5": cl5,
}


def oracle_table(raw: Raw) -> dict[tuple[str, str], object]:
    """(metric, element id) -> expected value for every built-in metric."""
    out = {}
    for c in raw.of("Class"):
        for name, fn in CLASS_ORACLES.items():
            out[(name, c["id"])] = fn(raw, c["id"])
    for p in raw.of("Package"):
        out[("PK1", p["id"])] = pk1(raw, p["id"])
        out[("PK2", p["id"])] = pk2(raw, p["id"])
        out[("PK3", p["id"])] = pk3(raw, p["id"])
    for u in raw.of("UseCase"):
        out[("ExtPts", u["id"])] = len(raw.owned(u["id"], "ExtensionPoint"))
        out[("Includes", u["id"])] = len(raw.owned(u["id"], "Include"))
        out[("Extends", u["id"])] = len(raw.owned(u["id"], "Extend"))
    for sm in raw.of("StateMachine"):
        for name, value in statechart(raw, sm["id"]).items():
            out[(name, sm["id"])] = value
    for act in raw.of("Activity"):
        for name, value in activity(raw, act["id"]).items():
            out[(name, act["id"])] = value
    for name, value in model_metrics(raw).items():
        out[(name, "(model)")] = value
    return out


# -- raw XML census ----------------------------------------------------------------

_UML_KIND = {
    "Package": "Package", "Class": "Class", "Interface": "Interface", "Property": "Attribute",
    "Operation": "Operation", "Parameter": "Parameter", "Association": "Association",
    "Generalization": "Generalization", "InterfaceRealization": "InterfaceRealization",
    "Dependency": "Dependency", "Usage": "Dependency", "Realization": "Dependency",
    "Actor": "Actor", "UseCase": "UseCase", "Include": "Include", "Extend": "Extend",
    "ExtensionPoint": "ExtensionPoint", "StateMachine": "StateMachine", "State": "State",
    "Pseudostate": "State", "FinalState": "State", "Transition": "Transition",
    "Trigger": "Trigger", "Activity": "Activity", "OpaqueAction": "Action",
    "CallOperationAction": "Action", "CentralBufferNode": "ObjectNode",
    "DataStoreNode": "ObjectNode", "Object": "ObjectNode", "InputPin": "Pin",
    "OutputPin": "Pin", "ControlFlow": "ControlFlow", "ObjectFlow": "ObjectFlow",
    "DecisionNode": "DecisionNode", "Decision": "DecisionNode", "InitialNode": "ControlNode",
    "ActivityFinalNode": "ControlNode", "ActivityInitial": "ControlNode",
    "ActivityFinal": "ControlNode", "ActivityPartition": "ActivityPartition",
    "Partition": "ActivityPartition", "ExceptionHandler": "ExceptionHandler",
    "Interaction": "Interaction", "Lifeline": "Lifeline", "Message": "Message",
}
_IMPLICIT = {
    "ownedAttribute": "Property", "ownedOperation": "Operation", "ownedParameter": "Parameter",
    "generalization": "Generalization", "interfaceRealization": "InterfaceRealization",
    "include": "Include", "extend": "Extend", "extensionPoint": "ExtensionPoint",
    "transition": "Transition", "trigger": "Trigger", "lifeline": "Lifeline",
    "message": "Message", "handler": "ExceptionHandler", "input": "InputPin",
    "output": "OutputPin",
}
XMI = "http://www.omg.org/spec/XMI/20131001"


def raw_census(document: bytes) -> dict[str, int]:
    """Per-kind counts straight from the XML tree, association ends excluded."""
    root = etree.fromstring(document)
    counts: Counter[str] = Counter()
    for node in root.iter():
        if not isinstance(node.tag, str) or etree.QName(node).namespace is not None:
            continue
        utype = node.get(f"{{{XMI}}}type")
        local = utype.split(":", 1)[1] if utype else _IMPLICIT.get(node.tag)
        if local is None or local not in _UML_KIND:
            continue
        if local == "Property" and node.tag == "ownedEnd":
            continue
        counts[_UML_KIND[local]] += 1
    return dict(sorted(counts.items()))
