"""XMI 2.x ingestion.

Elements are recognized by their ``xmi:type`` (or, for untyped property
elements such as ``<generalization>``, by a per-tag default).  Type names
map to :class:`~umlmetrics.model.ElementKind` through dialect tables shipped
as JSON in ``umlmetrics/data/dialects``; the table is picked from the
exporter named in the document header.

Unknown types are counted in ``UmlModel.unrecognized`` and their subtrees are
still searched for known elements.
"""

from __future__ import annotations

import json
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import BinaryIO

from lxml import etree

from .errors import InvalidModel, NotXmi, ParseError
from .model import ElementKind, ModelElement, UmlModel

K = ElementKind
log = logging.getLogger(__name__)

_VERSION_BY_NAMESPACE_DATE = {
    "20131001": "2.5",
    "20110701": "2.4.1",
    "20100901": "2.4",
    "20090901": "2.3",
}


@dataclass(frozen=True)
class XmiDialect:
    xmi_version: str
    exporter: str | None = None
    exporter_version: str | None = None

    def __str__(self) -> str:
        if self.exporter:
            return f"XMI {self.xmi_version} ({self.exporter})"
        return f"XMI {self.xmi_version}"


@dataclass(frozen=True)
class DialectTable:
    name: str
    exporters: tuple[str, ...] = ()
    types: dict[str, str] = field(default_factory=dict)
    transparent: frozenset[str] = frozenset()
    auxiliary: frozenset[str] = frozenset()
    tag_defaults: dict[str, str] = field(default_factory=dict)

    def matches(self, exporter: str | None) -> bool:
        if not exporter:
            return False
        low = exporter.casefold()
        return any(low.startswith(e.casefold()) for e in self.exporters)


def _read_table_files(directory: Path | None) -> dict[str, dict]:
    raw: dict[str, dict] = {}
    if directory is None:
        base = resources.files("umlmetrics") / "data" / "dialects"
        entries = [p for p in base.iterdir() if p.name.endswith(".json")]
    else:
        entries = sorted(Path(directory).glob("*.json"))
    for entry in entries:
        data = json.loads(entry.read_text(encoding="utf-8"))
        raw[data["name"]] = data
    return raw


def load_dialect_tables(directory: str | os.PathLike | None = None) -> dict[str, DialectTable]:
    """Load dialect tables, applying ``extends`` inheritance.

    Files in ``directory`` are layered over the shipped tables; a file with
    the same ``name`` as a shipped table replaces it.
    """
    raw = _read_table_files(None)
    if directory is not None:
        raw.update(_read_table_files(Path(directory)))
    tables: dict[str, DialectTable] = {}

    def build(name: str, chain: tuple[str, ...] = ()) -> DialectTable:
        if name in tables:
            return tables[name]
        if name in chain:
            raise ValueError(f"dialect tables extend each other cyclically: {name}")
        if name not in raw:
            raise ValueError(f"unknown dialect table: {name}")
        data = raw[name]
        types: dict[str, str] = {}
        transparent: set[str] = set()
        auxiliary: set[str] = set()
        tag_defaults: dict[str, str] = {}
        parent_name = data.get("extends")
        if parent_name:
            parent = build(parent_name, chain + (name,))
            types.update(parent.types)
            transparent |= parent.transparent
            auxiliary |= parent.auxiliary
            tag_defaults.update(parent.tag_defaults)
        for type_name, kind in data.get("types", {}).items():
            ElementKind(kind)
            types[type_name] = kind
        transparent |= set(data.get("transparent", ()))
        auxiliary |= set(data.get("auxiliary", ()))
        tag_defaults.update(data.get("tag_defaults", {}))
        table = DialectTable(
            name=name,
            exporters=tuple(data.get("exporters", ())),
            types=types,
            transparent=frozenset(transparent),
            auxiliary=frozenset(auxiliary),
            tag_defaults=tag_defaults,
        )
        tables[name] = table
        return table

    for name in raw:
        build(name)
    return tables


_TABLES: dict[str, DialectTable] | None = None


def default_tables() -> dict[str, DialectTable]:
    global _TABLES
    if _TABLES is None:
        _TABLES = load_dialect_tables()
    return _TABLES


def table_for(dialect: XmiDialect, tables: dict[str, DialectTable] | None = None) -> DialectTable:
    tables = tables if tables is not None else default_tables()
    for table in tables.values():
        if table.matches(dialect.exporter):
            return table
    return tables["canonical"]


# -- document level -------------------------------------------------------

def _read_bytes(document: bytes | str | os.PathLike | BinaryIO) -> tuple[bytes, str]:
    if isinstance(document, bytes):
        return document, "<bytes>"
    if isinstance(document, (str, os.PathLike)):
        path = Path(document)
        return path.read_bytes(), str(path)
    data = document.read()
    return data, getattr(document, "name", "<stream>")


def _parse_xml(data: bytes, source: str) -> etree._Element:
    parser = etree.XMLParser(resolve_entities=False, no_network=True, huge_tree=False,
                             remove_comments=True)
    try:
        return etree.fromstring(data, parser)
    except etree.XMLSyntaxError as exc:
        line, column = exc.position if exc.position else (exc.lineno, None)
        raise ParseError(exc.msg or "malformed XML", source, line, column) from None
    except ValueError as exc:
        raise ParseError(str(exc), source) from None


def _is_xmi_namespace(uri: str | None) -> bool:
    return bool(uri) and ("omg.org/spec/XMI" in uri or uri.rstrip("/").endswith("omg.org/XMI"))


def _is_uml_namespace(uri: str | None) -> bool:
    return bool(uri) and ("/UML" in uri or uri.endswith("/uml2") or "eclipse.org/uml2" in uri)


def _xmi_namespace(root: etree._Element) -> str | None:
    qname = etree.QName(root)
    if _is_xmi_namespace(qname.namespace):
        return qname.namespace
    for uri in root.nsmap.values():
        if _is_xmi_namespace(uri):
            return uri
    return None


def _dialect_of(root: etree._Element) -> XmiDialect:
    ns = _xmi_namespace(root)
    if ns is None:
        raise NotXmi(f"root element <{etree.QName(root).localname}> carries no XMI namespace")
    qname = etree.QName(root)
    if not (qname.namespace == ns and qname.localname == "XMI") and root.get(f"{{{ns}}}version") is None \
            and root.get("version") is None:
        raise NotXmi("document has neither an xmi:XMI root nor an xmi:version attribute")
    version = root.get(f"{{{ns}}}version") or root.get("version")
    if not version:
        tail = ns.rstrip("/").rsplit("/", 1)[-1]
        version = _VERSION_BY_NAMESPACE_DATE.get(tail, tail)
    exporter = exporter_version = None
    doc = root.find(f"{{{ns}}}Documentation")
    if doc is not None:
        exporter = doc.get("exporter") or doc.get(f"{{{ns}}}exporter")
        exporter_version = doc.get("exporterVersion") or doc.get(f"{{{ns}}}exporterVersion")
        if exporter is None:
            child = doc.find(f"{{{ns}}}exporter")
            if child is None:
                child = doc.find("exporter")
            if child is not None and child.text:
                exporter = child.text.strip()
        if exporter_version is None:
            child = doc.find(f"{{{ns}}}exporterVersion")
            if child is not None and child.text:
                exporter_version = child.text.strip()
    return XmiDialect(version, exporter or None, exporter_version or None)


def detect_dialect(document: bytes | str | os.PathLike | BinaryIO) -> XmiDialect:
    """Return the declared XMI version and exporter of a document."""
    data, source = _read_bytes(document)
    return _dialect_of(_parse_xml(data, source))


def parse_xmi(
    document: bytes | str | os.PathLike | BinaryIO,
    *,
    source: str | None = None,
    tables: dict[str, DialectTable] | None = None,
) -> UmlModel:
    """Parse an XMI 2.x document into a :class:`UmlModel`.

    ``document`` may be raw bytes, a path or a binary stream.
    """
    data, default_source = _read_bytes(document)
    source = source or default_source
    root = _parse_xml(data, source)
    dialect = _dialect_of(root)
    table = table_for(dialect, tables)
    reader = _Reader(root, table, source)
    elements = reader.read()
    for tag, count in sorted(reader.unrecognized.items()):
        log.debug("%s: %d unrecognized <%s> nodes", source, count, tag)
    return UmlModel(
        elements,
        source=f"{source} [{dialect}]",
        name=reader.model_name,
        foreign_ids=reader.foreign_ids,
        unrecognized=dict(reader.unrecognized),
    )


def parse_file(path: str | os.PathLike, **kwargs) -> UmlModel:
    return parse_xmi(Path(path), **kwargs)


# -- element reader -------------------------------------------------------

_PIN_DIRECTIONS = {"uml:InputPin": "in", "uml:ValuePin": "in", "uml:ActionInputPin": "in",
                   "uml:OutputPin": "out"}
_CONTROL_KINDS = {
    "uml:InitialNode": "initial", "uml:ActivityFinalNode": "final", "uml:FlowFinalNode": "flowfinal",
    "uml:ForkNode": "fork", "uml:JoinNode": "join", "uml:MergeNode": "merge",
    "uml:ActivityInitial": "initial", "uml:ActivityFinal": "final", "uml:Synchronization": "fork",
}
# Child property tags absorbed into their parent's flags or references.
_CONSUMED = {
    K.TRANSITION: {"guard", "effect", "ownedRule"},
    K.STATE: {"entry", "exit", "doActivity", "deferrableTrigger"},
    K.CONTROL_FLOW: {"guard", "weight"},
    K.OBJECT_FLOW: {"guard", "weight", "transformation", "selection"},
    K.ATTRIBUTE: {"type"},
    K.PARAMETER: {"type", "defaultValue"},
    K.PIN: {"type", "upperBound", "value"},
    K.OBJECT_NODE: {"type", "upperBound"},
    K.GENERALIZATION: {"general"},
    K.DEPENDENCY: {"client", "supplier"},
    K.INTERFACE_REALIZATION: {"client", "supplier", "contract"},
    K.ASSOCIATION: {"memberEnd", "navigableOwnedEnd"},
    K.LIFELINE: {"represents", "selector", "coveredBy"},
    K.MESSAGE: {"argument", "sendEvent", "receiveEvent"},
    K.EXCEPTION_HANDLER: {"handlerBody", "exceptionType", "exceptionInput"},
}


class _Reader:
    def __init__(self, root: etree._Element, table: DialectTable, source: str):
        self.root = root
        self.table = table
        self.source = source
        self.ns = _xmi_namespace(root)
        self.XID = f"{{{self.ns}}}id"
        self.XTYPE = f"{{{self.ns}}}type"
        self.XIDREF = f"{{{self.ns}}}idref"
        self.XUUID = f"{{{self.ns}}}uuid"
        self.elements: dict[str, dict] = {}
        self.order: list[str] = []
        self.unrecognized: Counter[str] = Counter()
        self.foreign_ids: set[str] = set()
        self.end_types: dict[str, str | None] = {}
        self.occurrences: dict[str, str | None] = {}
        self.in_partition: dict[str, list[str]] = {}
        self.member_ends: dict[str, list[str]] = {}
        self.model_name: str | None = None
        self._anon = 0

    # helpers

    def type_of(self, node: etree._Element) -> str | None:
        raw = node.get(self.XTYPE)
        if raw:
            prefix, _, local = raw.rpartition(":")
            if not prefix:
                return "uml:" + local
            uri = node.nsmap.get(prefix)
            if prefix == "uml" or _is_uml_namespace(uri):
                return "uml:" + local
            return raw
        qname = etree.QName(node)
        if _is_uml_namespace(qname.namespace):
            return "uml:" + qname.localname
        if qname.namespace is None:
            return self.table.tag_defaults.get(qname.localname)
        return None

    def id_of(self, node: etree._Element) -> str:
        value = node.get(self.XID) or node.get(self.XUUID) or node.get("id")
        if value is None:
            self._anon += 1
            value = f"_anon{self._anon}"
        return value

    def idrefs(self, node: etree._Element, name: str) -> list[str]:
        values: list[str] = []
        attr = node.get(name)
        if attr:
            values.extend(attr.split())
        for child in node.iterchildren(name):
            ref = child.get(self.XIDREF)
            if ref:
                values.append(ref)
        return values

    def idref(self, node: etree._Element, name: str) -> str | None:
        refs = self.idrefs(node, name)
        return refs[0] if refs else None

    def type_ref(self, node: etree._Element) -> tuple[str | None, str | None]:
        """(type id, type name) of a typed element; hrefs give only a name."""
        ref = self.idref(node, "type")
        if ref:
            return ref, None
        child = node.find("type")
        if child is not None and child.get("href"):
            return None, child.get("href").rsplit("#", 1)[-1]
        return None, None

    def mark_foreign(self, node: etree._Element) -> None:
        for el in node.iter():
            if not isinstance(el.tag, str):
                continue
            value = el.get(self.XID)
            if value:
                self.foreign_ids.add(value)

    def tags_of(self, node: etree._Element) -> dict[str, str]:
        tags: dict[str, str] = {}
        for ext in node.iterchildren(f"{{{self.ns}}}Extension"):
            for item in ext.iter():
                if not isinstance(item.tag, str):
                    continue
                if etree.QName(item).localname in ("taggedValue", "tag"):
                    key = item.get("tag") or item.get("name")
                    if key:
                        tags[key] = item.get("value", "")
        return tags

    def guard_is_trivial(self, node: etree._Element) -> bool:
        utype = self.type_of(node)
        if utype == "uml:Constraint":
            spec = node.find("specification")
            return spec is None or self.guard_is_trivial(spec)
        if utype == "uml:LiteralBoolean":
            return node.get("value", "false").strip().lower() == "true"
        if utype == "uml:OpaqueExpression":
            bodies = [b.text or "" for b in node.iterchildren("body")]
            if node.get("body") is not None:
                bodies.append(node.get("body"))
            return all(b.strip() in ("", "true", "[true]") for b in bodies)
        value = (node.get("value") or node.text or "").strip()
        return value in ("", "true", "[true]")

    # traversal

    def read(self) -> list[ModelElement]:
        qname = etree.QName(self.root)
        if qname.namespace == self.ns and qname.localname == "XMI":
            for child in self.root:
                self.walk(child, None, None)
        else:
            self.walk(self.root, None, None)
        self._resolve_late_refs()
        return [self._build(self.elements[i]) for i in self.order]

    def add(self, node: etree._Element, kind: ElementKind, owner: str | None,
            refs: dict | None = None) -> str:
        el_id = self.id_of(node)
        if el_id in self.elements:
            line = getattr(node, "sourceline", None)
            raise InvalidModel(f"{self.source}:{line}: duplicate xmi:id {el_id!r}")
        self.elements[el_id] = {
            "id": el_id,
            "kind": kind,
            "name": node.get("name"),
            "owner": owner,
            "refs": refs or {},
            "tags": self.tags_of(node),
        }
        self.order.append(el_id)
        return el_id

    def walk(self, node: etree._Element, owner: str | None, owner_kind: ElementKind | None) -> None:
        if not isinstance(node.tag, str):
            return
        qname = etree.QName(node)
        if qname.namespace == self.ns:
            return  # xmi:Extension, xmi:Documentation, ...
        utype = self.type_of(node)
        if utype is None:
            self.unrecognized[qname.localname if qname.namespace is None else node.tag] += 1
            self.mark_foreign(node)
            return
        if utype in self.table.auxiliary:
            self._auxiliary(node, utype)
            return
        if utype in self.table.transparent:
            if utype == "uml:Model" and self.model_name is None:
                self.model_name = node.get("name")
            if node.get(self.XID):
                self.foreign_ids.add(node.get(self.XID))
            for child in node:
                self.walk(child, owner, owner_kind)
            return
        kind_name = self.table.types.get(utype)
        if kind_name is None:
            self.unrecognized[utype] += 1
            if node.get(self.XID):
                self.foreign_ids.add(node.get(self.XID))
            for child in node:
                self.walk(child, owner, owner_kind)
            return
        kind = ElementKind(kind_name)
        if kind is K.ATTRIBUTE and (owner_kind is K.ASSOCIATION or node.get("association")):
            self._association_end(node)
            return
        el_id = self._element(node, utype, kind, owner, owner_kind)
        consumed = _CONSUMED.get(kind, set())
        for child in node:
            if not isinstance(child.tag, str):
                continue
            if etree.QName(child).localname in consumed and etree.QName(child).namespace is None:
                continue
            self.walk(child, el_id, kind)

    def _auxiliary(self, node: etree._Element, utype: str) -> None:
        if utype in ("uml:MessageOccurrenceSpecification", "uml:OccurrenceSpecification"):
            self.occurrences[self.id_of(node)] = self.idref(node, "covered")
        self.mark_foreign(node)

    def _association_end(self, node: etree._Element) -> None:
        end_id = self.id_of(node)
        self.end_types[end_id] = self.type_ref(node)[0]
        self.foreign_ids.add(end_id)

    def _element(self, node, utype: str, kind: ElementKind, owner, owner_kind) -> str:
        refs: dict = {}
        local = utype.split(":", 1)[1]
        if kind in (K.ATTRIBUTE, K.PARAMETER, K.OPERATION):
            if node.get("visibility") and kind is not K.PARAMETER:
                refs["visibility"] = node.get("visibility")
            if kind is not K.OPERATION:
                type_id, type_name = self.type_ref(node)
                refs["type"] = type_id
                refs["type_name"] = type_name
            if kind is K.PARAMETER:
                refs["direction"] = node.get("direction", "in")
            else:
                refs["static"] = node.get("isStatic") == "true"
            if kind is K.OPERATION:
                refs["method"] = self.idrefs(node, "method")
                refs["abstract"] = node.get("isAbstract") == "true"
        elif kind is K.CLASS:
            refs["abstract"] = node.get("isAbstract") == "true"
        elif kind is K.ASSOCIATION:
            ends = self.idrefs(node, "memberEnd")
            if not ends:
                ends = [self.id_of(c) for c in node.iterchildren("ownedEnd")]
        elif kind is K.GENERALIZATION:
            refs["specific"] = node.get("specific") or owner
            refs["general"] = self.idref(node, "general")
        elif kind is K.INTERFACE_REALIZATION:
            refs["client"] = self.idref(node, "client") if owner is None else owner
            refs["contract"] = self.idref(node, "contract") or self.idref(node, "supplier")
        elif kind is K.DEPENDENCY:
            refs["clients"] = self.idrefs(node, "client")
            refs["suppliers"] = self.idrefs(node, "supplier")
            if local != "Dependency":
                refs["stereotype"] = local
        elif kind is K.INCLUDE:
            refs["including"] = node.get("includingCase") or owner
            refs["addition"] = self.idref(node, "addition")
        elif kind is K.EXTEND:
            refs["extension"] = node.get("extension") or owner
            refs["extended"] = self.idref(node, "extendedCase")
            refs["locations"] = self.idrefs(node, "extensionLocation")
        elif kind in (K.STATE_MACHINE, K.ACTIVITY, K.INTERACTION):
            refs["specification"] = self.idref(node, "specification")
        elif kind is K.STATE:
            if utype == "uml:Pseudostate":
                refs["pseudostate"] = node.get("kind", "initial")
            elif utype == "uml:FinalState":
                refs["pseudostate"] = "final"
            for key, tag in (("entry", "entry"), ("exit", "exit"), ("do_activity", "doActivity")):
                refs[key] = node.find(tag) is not None or node.get(tag) is not None
        elif kind is K.TRANSITION:
            refs["source"] = self.idref(node, "source")
            refs["target"] = self.idref(node, "target")
            guard = node.find("guard")
            if guard is not None:
                refs["guard"] = not self.guard_is_trivial(guard)
            elif node.get("guard"):
                rule = next((r for r in node.iterchildren("ownedRule")
                             if self.id_of(r) == node.get("guard")), None)
                refs["guard"] = rule is None or not self.guard_is_trivial(rule)
            refs["effect"] = node.find("effect") is not None or node.get("effect") is not None
        elif kind is K.TRIGGER:
            refs["event"] = node.get("event")
        elif kind is K.ACTION:
            refs["action_kind"] = local
        elif kind is K.OBJECT_NODE:
            refs["node_kind"] = local
            refs["type"] = self.type_ref(node)[0]
        elif kind is K.PIN:
            refs["direction"] = _PIN_DIRECTIONS.get(utype) or (
                "out" if etree.QName(node).localname in ("output", "result") else "in")
            refs["type"] = self.type_ref(node)[0]
        elif kind in (K.CONTROL_FLOW, K.OBJECT_FLOW):
            refs["source"] = self.idref(node, "source")
            refs["target"] = self.idref(node, "target")
            guard = node.find("guard")
            refs["guard"] = guard is not None and not self.guard_is_trivial(guard)
        elif kind is K.CONTROL_NODE:
            refs["control"] = _CONTROL_KINDS.get(utype, local)
        elif kind is K.ACTIVITY_PARTITION:
            refs["nodes"] = self.idrefs(node, "node")
        elif kind is K.EXCEPTION_HANDLER:
            refs["handler_body"] = self.idref(node, "handlerBody")
            refs["exception_types"] = self.idrefs(node, "exceptionType")
        elif kind is K.LIFELINE:
            refs["represents"] = self.idref(node, "represents")
        elif kind is K.MESSAGE:
            refs["signature"] = self.idref(node, "signature")
            refs["sort"] = node.get("messageSort", "synchCall")
            refs["sender"] = self.idref(node, "sendEvent")
            refs["receiver"] = self.idref(node, "receiveEvent")
        el_id = self.add(node, kind, owner, refs)
        if kind is K.ASSOCIATION:
            self.member_ends[el_id] = ends
        if kind in (K.ACTION, K.OBJECT_NODE, K.DECISION_NODE, K.CONTROL_NODE):
            for partition in self.idrefs(node, "inPartition"):
                self.in_partition.setdefault(partition, []).append(el_id)
        return el_id

    def _resolve_late_refs(self) -> None:
        for assoc_id, ends in self.member_ends.items():
            types = []
            for end in ends:
                if end in self.end_types:
                    types.append(self.end_types[end])
                elif end in self.elements:  # owned attribute listed as member end
                    types.append(self.elements[end]["refs"].get("type"))
                else:
                    types.append(end)  # dangling; quarantined by UmlModel
            self.elements[assoc_id]["refs"]["ends"] = [t for t in types if t is not None]
        for el in self.elements.values():
            kind = el["kind"]
            refs = el["refs"]
            if kind is K.MESSAGE:
                for key in ("sender", "receiver"):
                    event = refs.get(key)
                    if event is not None:
                        refs[key] = self.occurrences.get(event, event)
            elif kind is K.LIFELINE:
                rep = refs.get("represents")
                if rep in self.end_types:
                    refs["represents"] = self.end_types[rep]
            elif kind is K.ACTIVITY_PARTITION:
                extra = self.in_partition.get(el["id"], [])
                refs["nodes"] = list(dict.fromkeys(list(refs.get("nodes", [])) + extra))

    @staticmethod
    def _build(raw: dict) -> ModelElement:
        return ModelElement(raw["id"], raw["kind"], raw["name"], raw["owner"], raw["refs"], raw["tags"])


def element_census(model: UmlModel) -> dict[str, int]:
    """Per-kind element counts of an ingested model."""
    counts = Counter(el.kind.value for el in model.elements.values())
    return dict(sorted(counts.items()))


__all__ = [
    "DialectTable",
    "XmiDialect",
    "default_tables",
    "detect_dialect",
    "element_census",
    "load_dialect_tables",
    "parse_file",
    "parse_xmi",
    "table_for",
]
