"""User-defined metrics and rules.

Definitions live in an XML document whose element tree mirrors the
expression grammar::

    <definitions>
      <metric name="public_ops" target="Class">
        <count relation="ownedOperation">
          <where attribute="visibility" equals="public"/>
        </count>
      </metric>
      <metric name="pkg_load" target="Package">
        <sum metric="public_ops" over="ownedClass"/>
      </metric>
      <rule name="WIDE-INTERFACE" target="Class" severity="warning"
            op="&gt;" threshold="10" message="too many public operations">
        <metric-ref name="public_ops"/>
      </rule>
    </definitions>

See ``docs/definitions.md`` for the full grammar.  The algebra is closed:
counts, aggregates over related elements, arithmetic and literals.  There is
no general scripting, so every expression terminates.
"""

from __future__ import annotations

import fnmatch
import math
import operator
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterator, Mapping, Sequence, Union

from lxml import etree

from .errors import CyclicDefinition, DslParseError, EvaluationError, UnresolvedMetric
from .model import CLASSIFIERS, ElementKind, UmlModel, Unavailable
from .registry import (MODEL_ROW_ID, MODEL_SCOPE, SCOPES, MetricContext, MetricRegistry,
                       MetricSpec, builtin_registry)
from .rules import SEVERITIES

K = ElementKind

# -- expression tree --------------------------------------------------------


@dataclass(frozen=True)
class Predicate:
    op: str  # equals | not-equals | absent | present | name-matches
    attribute: str | None = None
    value: str | None = None

    def test(self, model: UmlModel, el) -> bool:
        if self.op == "name-matches":
            return el.name is not None and fnmatch.fnmatchcase(el.name, self.value)
        actual = attribute_value(el, self.attribute)
        if self.op == "absent":
            return actual is None
        if self.op == "present":
            return actual is not None
        if self.op == "equals":
            return actual == self.value
        return actual != self.value


@dataclass(frozen=True)
class Literal:
    value: float
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class MetricRef:
    name: str
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Count:
    relation: str
    predicates: tuple[Predicate, ...] = ()
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Aggregate:
    func: str  # sum | max | min | avg
    metric: str
    relation: str
    predicates: tuple[Predicate, ...] = ()
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Arithmetic:
    op: str  # add | sub | mul | div
    operands: tuple[Any, ...]
    line: int | None = field(default=None, compare=False)


Expression = Union[Literal, MetricRef, Count, Aggregate, Arithmetic]


@dataclass(frozen=True)
class RuleSpec:
    severity: str
    op: str
    threshold: float
    message: str = ""


@dataclass(frozen=True)
class MetricDefinition:
    """A custom metric, or a rule when ``rule`` is set."""

    name: str
    target_kind: str
    expression: Expression
    description: str = ""
    rule: RuleSpec | None = None
    line: int | None = field(default=None, compare=False)

    @property
    def is_rule(self) -> bool:
        return self.rule is not None

    def references(self) -> Iterator[tuple[str, int | None]]:
        stack = [self.expression]
        while stack:
            node = stack.pop()
            if isinstance(node, MetricRef):
                yield node.name, node.line
            elif isinstance(node, Aggregate):
                yield node.metric, node.line
            elif isinstance(node, Arithmetic):
                stack.extend(node.operands)

    def render(self) -> str:
        return f"{self.name} := {render(self.expression)}"


def render(expr: Expression) -> str:
    """Compact textual form, used by the catalog."""
    def preds(ps):
        parts = []
        for p in ps:
            if p.op == "name-matches":
                parts.append(f"name ~ {p.value}")
            elif p.op in ("absent", "present"):
                parts.append(f"{p.attribute} {p.op}")
            else:
                parts.append(f"{p.attribute} {'=' if p.op == 'equals' else '!='} {p.value}")
        return ", " + ", ".join(parts) if parts else ""

    if isinstance(expr, Literal):
        return f"{expr.value:g}"
    if isinstance(expr, MetricRef):
        return expr.name
    if isinstance(expr, Count):
        return f"count({expr.relation}{preds(expr.predicates)})"
    if isinstance(expr, Aggregate):
        return f"{expr.func}({expr.metric} over {expr.relation}{preds(expr.predicates)})"
    symbol = {"add": " + ", "sub": " - ", "mul": " * ", "div": " / "}[expr.op]
    return "(" + symbol.join(render(o) for o in expr.operands) + ")"


# -- relations ----------------------------------------------------------------

def attribute_value(el, attribute: str) -> str | None:
    if attribute == "name":
        return el.name
    if attribute == "kind":
        return el.kind.value
    if attribute == "id":
        return el.id
    if attribute == "visibility" and el.kind in (K.ATTRIBUTE, K.OPERATION):
        return el.visibility
    if attribute in el.refs:
        value = el.refs[attribute]
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, tuple):
            return " ".join(value)
        return value
    return el.tags.get(attribute)


Navigate = Callable[[UmlModel, str], list[str]]


def _children(*kinds):
    return lambda model, el: [c.id for c in model.children(el, *kinds)]


def _contents(*kinds):
    return lambda model, el: [c.id for c in model.contents(el, *kinds)]


def _all_elements(model: UmlModel, el: str) -> list[str]:
    return list(model.elements)


_ANY = None
RELATIONS: dict[str, tuple[frozenset[str] | None, Navigate]] = {
    "ownedElement": (_ANY, _children()),
    "contents": (_ANY, _contents()),
    "ownedAttribute": (frozenset(k.value for k in CLASSIFIERS), _children(K.ATTRIBUTE)),
    "ownedOperation": (frozenset(k.value for k in CLASSIFIERS), _children(K.OPERATION)),
    "ownedParameter": (frozenset({"Operation"}), _children(K.PARAMETER)),
    "ownedClass": (frozenset({"Package"}), _children(K.CLASS)),
    "ownedInterface": (frozenset({"Package"}), _children(K.INTERFACE)),
    "ownedPackage": (frozenset({"Package"}), _children(K.PACKAGE)),
    "ownedUseCase": (frozenset({"Package"}), _children(K.USE_CASE)),
    "parents": (frozenset(k.value for k in CLASSIFIERS), lambda m, el: m.parents(el)),
    "children": (frozenset(k.value for k in CLASSIFIERS), lambda m, el: m.children_classes(el)),
    "ancestors": (frozenset(k.value for k in CLASSIFIERS), lambda m, el: m.ancestors(el)),
    "descendants": (frozenset(k.value for k in CLASSIFIERS), lambda m, el: sorted(m.descendants(el))),
    "states": (frozenset({"StateMachine"}), _contents(K.STATE)),
    "transitions": (frozenset({"StateMachine"}), _contents(K.TRANSITION)),
    "triggers": (frozenset({"Transition"}), _children(K.TRIGGER)),
    "actions": (frozenset({"Activity"}), _contents(K.ACTION)),
    "pins": (frozenset({"Action"}), _children(K.PIN)),
    "edges": (frozenset({"Activity"}), _contents(K.CONTROL_FLOW, K.OBJECT_FLOW)),
    "nodes": (frozenset({"Activity"}), _contents(K.ACTION, K.OBJECT_NODE, K.DECISION_NODE,
                                                  K.CONTROL_NODE)),
    "extensionPoints": (frozenset({"UseCase"}), _children(K.EXTENSION_POINT)),
    "includes": (frozenset({"UseCase"}), _children(K.INCLUDE)),
    "extends": (frozenset({"UseCase"}), _children(K.EXTEND)),
    "elements": (frozenset({MODEL_SCOPE}), _all_elements),
}


def _navigate(model: UmlModel, relation: str, el_id: str, scope: str) -> list[str]:
    applicable, nav = RELATIONS[relation]
    if applicable is not None and scope not in applicable:
        raise EvaluationError(
            f"relation {relation!r} does not apply to {scope} element {model.label(el_id)!r} "
            f"({el_id})" if el_id != MODEL_ROW_ID else
            f"relation {relation!r} does not apply to the model scope")
    if el_id == MODEL_ROW_ID and applicable is None:
        return [e for e in model.elements if model.elements[e].owner is None]
    return nav(model, el_id)


# -- parsing ------------------------------------------------------------------

_ARITH = {"add", "sub", "mul", "div"}
_AGG = {"sum", "max", "min", "avg"}
_RULE_OPS: dict[str, Callable[[float, float], bool]] = {
    ">": operator.gt, ">=": operator.ge, "<": operator.lt, "<=": operator.le,
    "==": operator.eq, "!=": operator.ne,
}


def _read(document: bytes | str | os.PathLike) -> tuple[bytes, str]:
    if isinstance(document, bytes):
        return document, "<definitions>"
    path = Path(document)
    return path.read_bytes(), str(path)


class _Parser:
    def __init__(self, source: str):
        self.source = source

    def fail(self, node, message: str, cls=DslParseError):
        raise cls(message, self.source, getattr(node, "sourceline", None))

    def required(self, node, attr: str) -> str:
        value = node.get(attr)
        if value is None or not value.strip():
            self.fail(node, f"<{node.tag}> needs a {attr!r} attribute")
        return value.strip()

    def predicates(self, node) -> tuple[Predicate, ...]:
        out = []
        for child in node:
            if not isinstance(child.tag, str):
                continue
            if child.tag != "where":
                self.fail(child, f"unexpected <{child.tag}> inside <{node.tag}>")
            if child.get("name-matches") is not None:
                out.append(Predicate("name-matches", "name", child.get("name-matches")))
                continue
            attribute = self.required(child, "attribute")
            for op in ("equals", "not-equals"):
                if child.get(op) is not None:
                    out.append(Predicate(op, attribute, child.get(op)))
                    break
            else:
                if child.get("absent") == "true":
                    out.append(Predicate("absent", attribute))
                elif child.get("present") == "true":
                    out.append(Predicate("present", attribute))
                else:
                    self.fail(child, "<where> needs equals, not-equals, absent or present")
        return tuple(out)

    def relation(self, node, attr: str) -> str:
        name = self.required(node, attr)
        if name not in RELATIONS:
            self.fail(node, f"unknown relation {name!r}; known: {', '.join(sorted(RELATIONS))}")
        return name

    def expression(self, node) -> Expression:
        tag, line = node.tag, node.sourceline
        if tag == "literal":
            try:
                return Literal(float(self.required(node, "value")), line)
            except ValueError:
                self.fail(node, f"literal value {node.get('value')!r} is not a number")
        if tag == "metric-ref":
            return MetricRef(self.required(node, "name"), line)
        if tag == "count":
            return Count(self.relation(node, "relation"), self.predicates(node), line)
        if tag in _AGG:
            return Aggregate(tag, self.required(node, "metric"), self.relation(node, "over"),
                             self.predicates(node), line)
        if tag in _ARITH:
            operands = tuple(self.expression(c) for c in node if isinstance(c.tag, str))
            if tag in ("sub", "div") and len(operands) != 2:
                self.fail(node, f"<{tag}> takes exactly two operands")
            if tag in ("add", "mul") and len(operands) < 2:
                self.fail(node, f"<{tag}> takes at least two operands")
            return Arithmetic(tag, operands, line)
        self.fail(node, f"unknown expression <{tag}>")

    def definition(self, node) -> MetricDefinition:
        name = self.required(node, "name")
        target = self.required(node, "target")
        if target not in SCOPES:
            self.fail(node, f"unknown target kind {target!r}")
        body = [c for c in node if isinstance(c.tag, str)]
        if len(body) != 1:
            self.fail(node, f"<{node.tag} name={name!r}> needs exactly one expression, got {len(body)}")
        expr = self.expression(body[0])
        rule = None
        if node.tag == "rule":
            if target == MODEL_SCOPE:
                self.fail(node, "rules must target an element kind, not the model")
            severity = node.get("severity", "warning")
            if severity not in SEVERITIES:
                self.fail(node, f"severity {severity!r} not one of {SEVERITIES}")
            op = node.get("op", ">")
            if op not in _RULE_OPS:
                self.fail(node, f"unknown comparison {op!r}")
            try:
                threshold = float(node.get("threshold", "0"))
            except ValueError:
                self.fail(node, "threshold is not a number")
            rule = RuleSpec(severity, op, threshold, node.get("message", ""))
        return MetricDefinition(name, target, expr, node.get("description", ""), rule,
                                node.sourceline)


def parse_definitions(document: bytes | str | os.PathLike,
                      registry: MetricRegistry | None = None) -> list[MetricDefinition]:
    """Parse and validate a definitions document.

    References may point at built-in metrics or at definitions appearing
    anywhere in the document; cycles are rejected.
    """
    data, source = _read(document)
    registry = registry if registry is not None else builtin_registry()
    try:
        root = etree.fromstring(data, etree.XMLParser(resolve_entities=False, no_network=True))
    except etree.XMLSyntaxError as exc:
        raise DslParseError(exc.msg, source, exc.lineno) from None
    parser = _Parser(source)
    if root.tag not in ("definitions", "metrics"):
        parser.fail(root, f"root element must be <definitions>, got <{root.tag}>")
    defs: list[MetricDefinition] = []
    seen: dict[str, MetricDefinition] = {}
    for node in root:
        if not isinstance(node.tag, str):
            continue
        if node.tag not in ("metric", "rule"):
            parser.fail(node, f"expected <metric> or <rule>, got <{node.tag}>")
        d = parser.definition(node)
        if d.name in seen:
            parser.fail(node, f"{d.name!r} is defined twice (first at line {seen[d.name].line})")
        if d.name in registry:
            parser.fail(node, f"{d.name!r} shadows a built-in metric")
        seen[d.name] = d
        defs.append(d)

    metrics = {d.name: d for d in defs if not d.is_rule}
    for d in defs:
        for ref, line in d.references():
            if ref not in metrics and ref not in registry:
                hint = " (rules cannot be referenced)" if ref in seen else ""
                raise UnresolvedMetric(f"{d.name!r} references unknown metric {ref!r}{hint}",
                                       source, line)
    _check_cycles(defs, metrics, source)
    return defs


def _check_cycles(defs: Sequence[MetricDefinition], metrics: Mapping[str, MetricDefinition],
                  source: str) -> None:
    state: dict[str, int] = {}

    def visit(name: str, path: list[str]) -> None:
        if state.get(name) == 2:
            return
        if state.get(name) == 1:
            cycle = path[path.index(name):] + [name]
            raise CyclicDefinition("cyclic definition: " + " -> ".join(cycle), source,
                                   metrics[name].line)
        state[name] = 1
        for ref, _ in metrics[name].references():
            if ref in metrics:
                visit(ref, path + [name])
        state[name] = 2

    for d in defs:
        if d.is_rule:
            for ref, _ in d.references():
                if ref in metrics:
                    visit(ref, [d.name])
        else:
            visit(d.name, [])


def load_definitions(path: str | os.PathLike, registry: MetricRegistry | None = None):
    return parse_definitions(Path(path), registry)


# -- evaluation ----------------------------------------------------------------

def _scope_of(model: UmlModel, el_id: str) -> str:
    return MODEL_SCOPE if el_id == MODEL_ROW_ID else model.elements[el_id].kind.value


def _arith(op: str, values: list) -> Any:
    if any(v is Unavailable for v in values):
        return Unavailable
    if op == "add":
        return sum(values)
    if op == "mul":
        return math.prod(values)
    if op == "sub":
        return values[0] - values[1]
    if values[1] == 0:
        return Unavailable
    return values[0] / values[1]


class Evaluator:
    """Evaluates expressions against one model, memoizing metric values."""

    def __init__(self, model: UmlModel, registry: MetricRegistry, context: MetricContext | None = None):
        self.model = model
        self.registry = registry
        self.ctx = context or MetricContext(model)
        self._memo: dict[tuple[str, str], Any] = {}

    def metric(self, name: str, el_id: str) -> Any:
        key = (name, el_id)
        if key not in self._memo:
            spec = self.registry[name]
            scope = _scope_of(self.model, el_id)
            if spec.scope != scope:
                raise EvaluationError(
                    f"metric {name!r} applies to {spec.scope} elements, not to {scope} "
                    f"element {self.model.label(el_id)!r} ({el_id})")
            self._memo[key] = spec.compute(self.ctx, el_id)
        return self._memo[key]

    def related(self, relation: str, predicates, el_id: str) -> list[str]:
        found = _navigate(self.model, relation, el_id, _scope_of(self.model, el_id))
        return [r for r in found if all(p.test(self.model, self.model.elements[r]) for p in predicates)]

    def eval(self, expr: Expression, el_id: str) -> Any:
        if isinstance(expr, Literal):
            return expr.value
        if isinstance(expr, MetricRef):
            return self.metric(expr.name, el_id)
        if isinstance(expr, Count):
            return len(self.related(expr.relation, expr.predicates, el_id))
        if isinstance(expr, Aggregate):
            values = [self.metric(expr.metric, r)
                      for r in self.related(expr.relation, expr.predicates, el_id)]
            if any(v is Unavailable for v in values):
                return Unavailable
            if expr.func == "sum":
                return sum(values)
            if not values:
                return Unavailable
            if expr.func == "max":
                return max(values)
            if expr.func == "min":
                return min(values)
            return sum(values) / len(values)
        return _arith(expr.op, [self.eval(o, el_id) for o in expr.operands])


def register_definitions(registry: MetricRegistry, definitions: Sequence[MetricDefinition]) -> MetricRegistry:
    """Copy of ``registry`` extended with the metric (non-rule) definitions."""
    out = registry.copy()
    for d in definitions:
        if d.is_rule:
            continue
        out.register(MetricSpec(
            d.name, d.target_kind, _definition_compute(d, out),
            d.description or "user-defined metric", d.render(), ("user",), builtin=False))
    return out


def _definition_compute(defn: MetricDefinition, registry: MetricRegistry):
    def compute(ctx: MetricContext, el_id: str) -> Any:
        evaluators = ctx.__dict__.setdefault("_dsl_evaluators", {})
        ev = evaluators.get(id(registry))
        if ev is None:
            ev = evaluators[id(registry)] = Evaluator(ctx.model, registry, ctx)
        return ev.eval(defn.expression, el_id)
    return compute


def _targets(model: UmlModel, target: str) -> list[str]:
    if target == MODEL_SCOPE:
        return [MODEL_ROW_ID]
    return [el.id for el in model.of_kind(ElementKind(target))]


def evaluate_definition(model: UmlModel, definition: MetricDefinition,
                        registry: MetricRegistry | None = None,
                        definitions: Sequence[MetricDefinition] = (),
                        context: MetricContext | None = None) -> dict[str, Any]:
    """Value of ``definition`` for every element of its target kind.

    Other user definitions it references must be passed in ``definitions``
    or already be present in ``registry``.
    """
    registry = registry if registry is not None else builtin_registry()
    extra = [d for d in definitions if d.name not in registry]
    if extra:
        registry = register_definitions(registry, extra)
    ev = Evaluator(model, registry, context)
    return {el_id: ev.eval(definition.expression, el_id) for el_id in _targets(model, definition.target_kind)}


def rule_violations(model: UmlModel, definition: MetricDefinition,
                    registry: MetricRegistry | None = None,
                    definitions: Sequence[MetricDefinition] = ()) -> Iterator[tuple[str, str]]:
    """``(element id, message)`` for every element where a DSL rule fires."""
    rule = definition.rule
    compare = _RULE_OPS[rule.op]
    values = evaluate_definition(model, definition, registry, definitions)
    for el_id, value in values.items():
        if value is Unavailable or not compare(value, rule.threshold):
            continue
        label = "model" if el_id == MODEL_ROW_ID else repr(model.label(el_id))
        message = rule.message or f"{definition.name}"
        yield el_id, f"{message}: {label} has value {value:g} ({rule.op} {rule.threshold:g})"
