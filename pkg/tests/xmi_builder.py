"""Programmatic construction of XMI test models.

Every builder call emits XML and appends a plain record to ``records``.  The
records are the ground truth used by the brute-force oracles, so they never
pass through the package's parser.
"""

from __future__ import annotations

from collections import defaultdict

from lxml import etree

XMI_NS = "http://www.omg.org/spec/XMI/20131001"
UML_NS = "http://www.omg.org/spec/UML/20131001"
NSMAP = {"xmi": XMI_NS, "uml": UML_NS}
XID = f"{{{XMI_NS}}}id"
XTYPE = f"{{{XMI_NS}}}type"


class XmiBuilder:
    def __init__(self, name: str = "Model", exporter: str | None = None,
                 exporter_version: str | None = None, implicit_types: bool = False):
        self.records: list[dict] = []
        self.implicit_types = implicit_types
        self._counter: defaultdict[str, int] = defaultdict(int)
        self._nodes: dict[str, etree._Element] = {}
        self._regions: dict[str, etree._Element] = {}
        self.root = etree.Element(f"{{{XMI_NS}}}XMI", nsmap=NSMAP)
        self.root.set(f"{{{XMI_NS}}}version", "2.5")
        if exporter is not None:
            doc = etree.SubElement(self.root, f"{{{XMI_NS}}}Documentation")
            doc.set("exporter", exporter)
            if exporter_version:
                doc.set("exporterVersion", exporter_version)
        self.model = etree.SubElement(self.root, f"{{{UML_NS}}}Model")
        self.model.set(XID, "model")
        self.model.set("name", name)

    # -- plumbing ------------------------------------------------------------

    def _new_id(self, stem: str) -> str:
        self._counter[stem] += 1
        return f"{stem}{self._counter[stem]}"

    def _emit(self, parent: etree._Element, tag: str, utype: str, stem: str,
              name: str | None = None, implicit_ok: bool = False, **attrs) -> tuple[str, etree._Element]:
        el_id = self._new_id(stem)
        node = etree.SubElement(parent, tag)
        if not (implicit_ok and self.implicit_types):
            node.set(XTYPE, utype)
        node.set(XID, el_id)
        if name is not None:
            node.set("name", name)
        for key, value in attrs.items():
            if value is not None:
                node.set(key, value)
        self._nodes[el_id] = node
        return el_id, node

    def _record(self, el_id: str, kind: str, name: str | None, owner: str | None, **fields) -> str:
        self.records.append({"id": el_id, "kind": kind, "name": name, "owner": owner, **fields})
        return el_id

    def _container(self, parent: str | None) -> etree._Element:
        return self.model if parent is None else self._nodes[parent]

    def _tag(self, node: etree._Element, key: str, value: str) -> None:
        ext = node.find(f"{{{XMI_NS}}}Extension")
        if ext is None:
            ext = etree.SubElement(node, f"{{{XMI_NS}}}Extension", extender="test")
        etree.SubElement(ext, "taggedValue", tag=key, value=value)

    def to_bytes(self) -> bytes:
        return etree.tostring(self.root, xml_declaration=True, encoding="UTF-8", pretty_print=True)

    # -- structure -----------------------------------------------------------

    def package(self, name: str | None, parent: str | None = None) -> str:
        el_id, _ = self._emit(self._container(parent), "packagedElement", "uml:Package", "pkg", name)
        return self._record(el_id, "Package", name, parent)

    def clazz(self, name: str | None, parent: str | None = None, abstract: bool = False) -> str:
        el_id, _ = self._emit(self._container(parent), "packagedElement", "uml:Class", "cls", name,
                              isAbstract="true" if abstract else None)
        return self._record(el_id, "Class", name, parent, abstract=abstract)

    def interface(self, name: str, parent: str | None = None) -> str:
        el_id, _ = self._emit(self._container(parent), "packagedElement", "uml:Interface", "ifc", name)
        return self._record(el_id, "Interface", name, parent)

    def attribute(self, owner: str, name: str | None, type: str | None = None,
                  visibility: str = "public") -> str:
        el_id, _ = self._emit(self._nodes[owner], "ownedAttribute", "uml:Property", "att", name,
                              implicit_ok=True, visibility=visibility, type=type)
        return self._record(el_id, "Attribute", name, owner, type=type, visibility=visibility)

    def operation(self, owner: str, name: str | None, visibility: str = "public",
                  params: tuple = ()) -> str:
        el_id, node = self._emit(self._nodes[owner], "ownedOperation", "uml:Operation", "op", name,
                                 implicit_ok=True, visibility=visibility)
        self._record(el_id, "Operation", name, owner, visibility=visibility)
        for i, ptype in enumerate(params):
            pid, _ = self._emit(node, "ownedParameter", "uml:Parameter", "par", f"p{i}",
                                implicit_ok=True, type=ptype)
            self._record(pid, "Parameter", f"p{i}", el_id, type=ptype)
        return el_id

    def generalization(self, child: str, parent: str) -> str:
        el_id, _ = self._emit(self._nodes[child], "generalization", "uml:Generalization", "gen",
                              implicit_ok=True, general=parent)
        return self._record(el_id, "Generalization", None, child, specific=child, general=parent)

    def realization(self, client: str, contract: str) -> str:
        el_id, _ = self._emit(self._nodes[client], "interfaceRealization", "uml:InterfaceRealization",
                              "real", implicit_ok=True, client=client, contract=contract)
        return self._record(el_id, "InterfaceRealization", None, client, client=client,
                            contract=contract)

    def association(self, a: str, b: str, parent: str | None = None, name: str | None = None) -> str:
        el_id, node = self._emit(self._container(parent), "packagedElement", "uml:Association",
                                 "assoc", name)
        ends = []
        for t in (a, b):
            end_id = self._new_id("end")
            end = etree.SubElement(node, "ownedEnd")
            end.set(XTYPE, "uml:Property")
            end.set(XID, end_id)
            end.set("type", t)
            ends.append(end_id)
        node.set("memberEnd", " ".join(ends))
        return self._record(el_id, "Association", name, parent, ends=[a, b])

    def dependency(self, client: str, supplier: str, parent: str | None = None,
                   utype: str = "uml:Dependency") -> str:
        el_id, _ = self._emit(self._container(parent), "packagedElement", utype, "dep",
                              client=client, supplier=supplier)
        return self._record(el_id, "Dependency", None, parent, client=client, supplier=supplier)

    # -- use cases -----------------------------------------------------------

    def actor(self, name: str, parent: str | None = None, complexity: str | None = None) -> str:
        el_id, node = self._emit(self._container(parent), "packagedElement", "uml:Actor", "act", name)
        if complexity:
            self._tag(node, "complexity", complexity)
        return self._record(el_id, "Actor", name, parent, complexity=complexity)

    def usecase(self, name: str | None, parent: str | None = None, complexity: str | None = None) -> str:
        el_id, node = self._emit(self._container(parent), "packagedElement", "uml:UseCase", "uc", name)
        if complexity:
            self._tag(node, "complexity", complexity)
        return self._record(el_id, "UseCase", name, parent, complexity=complexity)

    def extension_point(self, usecase: str, name: str) -> str:
        el_id, _ = self._emit(self._nodes[usecase], "extensionPoint", "uml:ExtensionPoint", "xp",
                              name, implicit_ok=True)
        return self._record(el_id, "ExtensionPoint", name, usecase)

    def include(self, usecase: str, addition: str) -> str:
        el_id, _ = self._emit(self._nodes[usecase], "include", "uml:Include", "inc",
                              implicit_ok=True, addition=addition)
        return self._record(el_id, "Include", None, usecase, addition=addition)

    def extend(self, usecase: str, extended: str) -> str:
        el_id, _ = self._emit(self._nodes[usecase], "extend", "uml:Extend", "ext",
                              implicit_ok=True, extendedCase=extended)
        return self._record(el_id, "Extend", None, usecase, extended=extended)

    # -- state machines --------------------------------------------------------

    def state_machine(self, name: str, owner: str | None = None, specification: str | None = None) -> str:
        if owner is not None and self._records_kind(owner) in ("Class", "Interface"):
            tag = "ownedBehavior"
        else:
            tag = "packagedElement"
        el_id, node = self._emit(self._container(owner), tag, "uml:StateMachine", "sm", name,
                                 specification=specification)
        region = etree.SubElement(node, "region")
        region.set(XTYPE, "uml:Region")
        region.set(XID, self._new_id("region"))
        self._regions[el_id] = region
        return self._record(el_id, "StateMachine", name, owner, specification=specification)

    def _records_kind(self, el_id: str) -> str | None:
        for r in self.records:
            if r["id"] == el_id:
                return r["kind"]
        return None

    def state(self, sm: str, name: str | None, entry: bool = False, exit: bool = False,
              do: bool = False) -> str:
        el_id, node = self._emit(self._regions[sm], "subvertex", "uml:State", "st", name)
        for flag, tag in ((entry, "entry"), (exit, "exit"), (do, "doActivity")):
            if flag:
                b = etree.SubElement(node, tag)
                b.set(XTYPE, "uml:OpaqueBehavior")
                b.set(XID, self._new_id("beh"))
        return self._record(el_id, "State", name, sm, pseudostate=None, entry=entry, exit=exit, do=do)

    def pseudostate(self, sm: str, kind: str = "initial") -> str:
        el_id, _ = self._emit(self._regions[sm], "subvertex", "uml:Pseudostate", "ps", None, kind=kind)
        return self._record(el_id, "State", None, sm, pseudostate=kind, entry=False, exit=False,
                            do=False)

    def final_state(self, sm: str) -> str:
        el_id, _ = self._emit(self._regions[sm], "subvertex", "uml:FinalState", "fs", None)
        return self._record(el_id, "State", None, sm, pseudostate="final", entry=False, exit=False,
                            do=False)

    def transition(self, sm: str, source: str, target: str, triggers: int = 0,
                   guard: str | None = None, effect: bool = False) -> str:
        el_id, node = self._emit(self._regions[sm], "transition", "uml:Transition", "tr",
                                 implicit_ok=True, source=source, target=target)
        for i in range(triggers):
            tid, _ = self._emit(node, "trigger", "uml:Trigger", "trg", f"ev{i}", implicit_ok=True)
            self._record(tid, "Trigger", f"ev{i}", el_id)
        if guard is not None:
            g = etree.SubElement(node, "guard")
            g.set(XTYPE, "uml:Constraint")
            g.set(XID, self._new_id("guard"))
            spec = etree.SubElement(g, "specification")
            spec.set(XTYPE, "uml:OpaqueExpression")
            spec.set(XID, self._new_id("expr"))
            etree.SubElement(spec, "body").text = guard
        if effect:
            e = etree.SubElement(node, "effect")
            e.set(XTYPE, "uml:OpaqueBehavior")
            e.set(XID, self._new_id("beh"))
        return self._record(el_id, "Transition", None, sm, source=source, target=target,
                            triggers=triggers, guard=guard is not None and guard.strip() != "true",
                            effect=effect)

    # -- activities --------------------------------------------------------------

    def activity(self, name: str, owner: str | None = None, specification: str | None = None,
                 ) -> str:
        tag = "ownedBehavior" if owner is not None and self._records_kind(owner) == "Class" \
            else "packagedElement"
        el_id, _ = self._emit(self._container(owner), tag, "uml:Activity", "actv", name,
                              specification=specification)
        return self._record(el_id, "Activity", name, owner, specification=specification)

    def action(self, activity: str, name: str, inputs: int = 0, outputs: int = 0,
               utype: str = "uml:OpaqueAction", partition: str | None = None) -> str:
        el_id, node = self._emit(self._nodes[activity], "node", utype, "a", name,
                                 inPartition=partition)
        self._record(el_id, "Action", name, activity, partition=partition)
        for i in range(inputs):
            pid, _ = self._emit(node, "input", "uml:InputPin", "pin", f"in{i}", implicit_ok=True)
            self._record(pid, "Pin", f"in{i}", el_id)
        for i in range(outputs):
            pid, _ = self._emit(node, "output", "uml:OutputPin", "pin", f"out{i}", implicit_ok=True)
            self._record(pid, "Pin", f"out{i}", el_id)
        return el_id

    def object_node(self, activity: str, name: str, utype: str = "uml:CentralBufferNode") -> str:
        el_id, _ = self._emit(self._nodes[activity], "node", utype, "obj", name)
        return self._record(el_id, "ObjectNode", name, activity)

    def decision(self, activity: str, name: str | None = None, utype: str = "uml:DecisionNode") -> str:
        el_id, _ = self._emit(self._nodes[activity], "node", utype, "dec", name)
        return self._record(el_id, "DecisionNode", name, activity)

    def control_node(self, activity: str, utype: str = "uml:InitialNode") -> str:
        el_id, _ = self._emit(self._nodes[activity], "node", utype, "ctl", None)
        return self._record(el_id, "ControlNode", None, activity)

    def flow(self, activity: str, source: str, target: str, guard: str | None = None,
             object_flow: bool = False) -> str:
        utype = "uml:ObjectFlow" if object_flow else "uml:ControlFlow"
        el_id, node = self._emit(self._nodes[activity], "edge", utype, "flow",
                                 source=source, target=target)
        if guard is not None:
            g = etree.SubElement(node, "guard")
            g.set(XTYPE, "uml:LiteralString")
            g.set(XID, self._new_id("guard"))
            g.set("value", guard)
        return self._record(el_id, "ObjectFlow" if object_flow else "ControlFlow", None, activity,
                            source=source, target=target,
                            guard=guard is not None and guard.strip() not in ("", "true", "[true]"))

    def partition(self, activity: str, name: str, utype: str = "uml:ActivityPartition") -> str:
        el_id, _ = self._emit(self._nodes[activity], "group", utype, "part", name)
        return self._record(el_id, "ActivityPartition", name, activity)

    def exception_handler(self, action: str, body: str) -> str:
        el_id, _ = self._emit(self._nodes[action], "handler", "uml:ExceptionHandler", "exh",
                              implicit_ok=True, handlerBody=body)
        return self._record(el_id, "ExceptionHandler", None, action, body=body)

    # -- interactions ------------------------------------------------------------

    def interaction(self, name: str, owner: str, specification: str | None = None) -> str:
        el_id, _ = self._emit(self._nodes[owner], "ownedBehavior", "uml:Interaction", "int", name,
                              specification=specification)
        return self._record(el_id, "Interaction", name, owner, specification=specification)

    def lifeline(self, interaction: str, represents: str, name: str | None = None) -> str:
        el_id, _ = self._emit(self._nodes[interaction], "lifeline", "uml:Lifeline", "ll", name,
                              implicit_ok=True, represents=represents)
        return self._record(el_id, "Lifeline", name, interaction, represents=represents)

    def message(self, interaction: str, sender: str, receiver: str, signature: str | None = None,
                name: str | None = None) -> str:
        inter = self._nodes[interaction]
        send_id, recv_id = self._new_id("mos"), self._new_id("mos")
        for occ, lifeline in ((send_id, sender), (recv_id, receiver)):
            frag = etree.SubElement(inter, "fragment")
            frag.set(XTYPE, "uml:MessageOccurrenceSpecification")
            frag.set(XID, occ)
            frag.set("covered", lifeline)
        el_id, _ = self._emit(inter, "message", "uml:Message", "msg", name, implicit_ok=True,
                              sendEvent=send_id, receiveEvent=recv_id, signature=signature)
        return self._record(el_id, "Message", name, interaction, sender=sender, receiver=receiver,
                            signature=signature)
