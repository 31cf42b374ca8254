"""Design rule checks over a model.

Built-in rules cover incomplete designs (unnamed elements, isolated states,
empty classes), naming conventions and oversized classes.  Rules written in
the metric definition language can be added through ``Ruleset.custom``.
"""

from __future__ import annotations

import fnmatch
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Mapping, Sequence

from .errors import InvalidRuleset
from .model import ElementKind, UmlModel

K = ElementKind

SEVERITIES = ("info", "warning", "error")


@dataclass(frozen=True, order=True)
class RuleFinding:
    rule_id: str
    element: str
    severity: str = field(compare=False)
    message: str = field(compare=False)

    def as_dict(self) -> dict[str, str]:
        return {"rule": self.rule_id, "element": self.element, "severity": self.severity,
                "message": self.message}


@dataclass(frozen=True)
class RuleInfo:
    rule_id: str
    severity: str
    description: str


BUILTIN_RULES: dict[str, RuleInfo] = {
    r.rule_id: r for r in (
        RuleInfo("EMPTY-CLASS", "warning", "Class with neither attributes nor operations."),
        RuleInfo("GOD-CLASS", "warning",
                 "Class whose number of operations exceeds the configured threshold."),
        RuleInfo("ISOLATED-STATE", "warning",
                 "State with neither incoming nor outgoing transitions."),
        RuleInfo("NAMING-CONVENTION", "warning",
                 "Element name does not match the naming pattern configured for its kind."),
        RuleInfo("UNNAMED-ELEMENT", "error",
                 "Class, attribute, operation, package, use case or state without a name."),
    )
}

DEFAULT_NAMING = {
    "Class": "[A-Z]*",
    "Interface": "[A-Z]*",
    "UseCase": "[A-Z]*",
    "Attribute": "[a-z_]*",
    "Operation": "[a-z_]*",
}

_NAMED_KINDS = (K.CLASS, K.ATTRIBUTE, K.OPERATION, K.PACKAGE, K.USE_CASE, K.STATE)


@dataclass(frozen=True)
class Ruleset:
    """Which rules run, and their parameters.

    ``naming`` maps element kind names to anchored wildcard patterns
    (``*``, ``?``, ``[A-Z]``; matched case-sensitively against the whole
    name).
    """

    enabled: tuple[str, ...] = tuple(sorted(BUILTIN_RULES))
    naming: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_NAMING))
    god_class_threshold: int = 20
    severities: Mapping[str, str] = field(default_factory=dict)
    custom: tuple[Any, ...] = ()
    definitions: tuple[Any, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "enabled", tuple(self.enabled))
        object.__setattr__(self, "custom", tuple(self.custom))
        object.__setattr__(self, "definitions", tuple(self.definitions) or tuple(self.custom))
        for kind in self.naming:
            try:
                ElementKind(kind)
            except ValueError:
                raise InvalidRuleset(f"naming pattern for unknown element kind {kind!r}") from None
        for rule_id, sev in self.severities.items():
            if sev not in SEVERITIES:
                raise InvalidRuleset(f"severity {sev!r} of {rule_id} not one of {SEVERITIES}")
        if self.god_class_threshold < 0:
            raise InvalidRuleset("god_class_threshold must be non-negative")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any] | None, definitions: Sequence[Any] = ()) -> Ruleset:
        """Build from a config section; DSL rules among ``definitions`` become custom rules."""
        data = dict(data or {})
        custom = [d for d in definitions if d.is_rule]
        unknown = set(data) - {"enabled", "disabled", "naming", "god_class_threshold", "severities"}
        if unknown:
            raise InvalidRuleset(f"unknown rules keys: {sorted(unknown)}")
        custom_ids = [c.name for c in custom]
        enabled = list(data.get("enabled") or sorted(BUILTIN_RULES) + custom_ids)
        disabled = set(data.get("disabled") or ())
        naming = dict(DEFAULT_NAMING)
        naming.update(data.get("naming") or {})
        naming = {k: v for k, v in naming.items() if v is not None}
        try:
            threshold = int(data.get("god_class_threshold", 20))
        except (TypeError, ValueError):
            raise InvalidRuleset("god_class_threshold must be an integer") from None
        return cls(
            enabled=tuple(r for r in enabled if r not in disabled),
            naming=naming,
            god_class_threshold=threshold,
            severities=dict(data.get("severities") or {}),
            custom=tuple(custom),
            definitions=tuple(definitions),
        )

    def registered(self) -> dict[str, str]:
        """Rule id -> default severity for every rule this ruleset knows."""
        known = {rid: info.severity for rid, info in BUILTIN_RULES.items()}
        for rule in self.custom:
            known[rule.name] = rule.rule.severity
        return known

    def as_dict(self) -> dict[str, Any]:
        return {
            "enabled": list(self.enabled),
            "naming": dict(self.naming),
            "god_class_threshold": self.god_class_threshold,
            "severities": dict(self.severities),
            "custom": [r.name for r in self.custom],
        }


def _is_unnamed(el) -> bool:
    return el.name is None or not el.name.strip()


def _unnamed(model: UmlModel, ruleset: Ruleset) -> Iterator[tuple[str, str]]:
    for el in model.of_kind(*_NAMED_KINDS):
        if el.kind is K.STATE and el.ref("pseudostate") is not None:
            continue
        if el.kind is K.ATTRIBUTE and model.elements.get(el.owner or "") is not None \
                and model.elements[el.owner].kind is K.INTERACTION:
            continue
        if _is_unnamed(el):
            where = ""
            if el.owner is not None:
                where = f" in {model.qualified_name(el.owner)}"
            yield el.id, f"unnamed {el.kind.value.lower()}{where}"


def _isolated_states(model: UmlModel, ruleset: Ruleset) -> Iterator[tuple[str, str]]:
    for state in model.of_kind(K.STATE):
        if state.ref("pseudostate") is not None:
            continue
        if not model.indices.transitions_from.get(state.id) and not model.indices.transitions_to.get(state.id):
            yield state.id, f"state {model.label(state.id)!r} has no transitions"


def _naming(model: UmlModel, ruleset: Ruleset) -> Iterator[tuple[str, str]]:
    for kind_name, pattern in sorted(ruleset.naming.items()):
        for el in model.of_kind(ElementKind(kind_name)):
            if _is_unnamed(el):
                continue  # reported by UNNAMED-ELEMENT
            if not fnmatch.fnmatchcase(el.name, pattern):
                yield el.id, f"{kind_name} name {el.name!r} does not match {pattern!r}"


def _empty_classes(model: UmlModel, ruleset: Ruleset) -> Iterator[tuple[str, str]]:
    for cls in model.of_kind(K.CLASS):
        if not model.children(cls.id, K.ATTRIBUTE, K.OPERATION):
            yield cls.id, f"class {model.label(cls.id)!r} has no attributes and no operations"


def _god_classes(model: UmlModel, ruleset: Ruleset) -> Iterator[tuple[str, str]]:
    limit = ruleset.god_class_threshold
    for cls in model.of_kind(K.CLASS):
        count = len(model.children(cls.id, K.OPERATION))
        if count > limit:
            yield cls.id, f"class {model.label(cls.id)!r} has {count} operations (threshold {limit})"


_CHECKS: dict[str, Callable[[UmlModel, Ruleset], Iterator[tuple[str, str]]]] = {
    "EMPTY-CLASS": _empty_classes,
    "GOD-CLASS": _god_classes,
    "ISOLATED-STATE": _isolated_states,
    "NAMING-CONVENTION": _naming,
    "UNNAMED-ELEMENT": _unnamed,
}


def run_rules(model: UmlModel, ruleset: Ruleset | None = None) -> list[RuleFinding]:
    """Run every enabled rule; findings are sorted by (rule id, element id)."""
    ruleset = ruleset or Ruleset()
    if not ruleset.enabled:
        raise InvalidRuleset("ruleset enables no rules")
    registered = ruleset.registered()
    unknown = [r for r in ruleset.enabled if r not in registered]
    if unknown:
        raise InvalidRuleset(f"unknown rule ids: {', '.join(unknown)}")
    custom = {r.name: r for r in ruleset.custom}
    findings: list[RuleFinding] = []
    for rule_id in dict.fromkeys(ruleset.enabled):
        severity = ruleset.severities.get(rule_id, registered[rule_id])
        if rule_id in _CHECKS:
            hits = _CHECKS[rule_id](model, ruleset)
        else:
            from .dsl import rule_violations
            hits = rule_violations(model, custom[rule_id], definitions=ruleset.definitions)
        for element, message in hits:
            findings.append(RuleFinding(rule_id, element, severity, message))
    return sorted(set(findings))


def has_errors(findings: Sequence[RuleFinding]) -> bool:
    return any(f.severity == "error" for f in findings)
