"""Structural size and coupling metrics for classes, packages and use cases.

The weighted metrics (CL1, CL2, PK2, UC4) have no published formula; their
weights live in :class:`WeightConfig` and are echoed into every report.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

from . import ck
from .errors import InvalidConfig
from .model import CLASSIFIERS, ElementKind, UmlModel

K = ElementKind

DEFAULT_RESPONSIBILITY_WEIGHTS = {"public": 1.0, "protected": 0.5, "package": 0.5, "private": 0.25}
DEFAULT_DEPENDENCY_WEIGHTS = {
    "association": 1.0,
    "dependency": 0.5,
    "generalization": 0.0,
    "realization": 0.0,
}


@dataclass(frozen=True)
class WeightConfig:
    responsibility_weights: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_RESPONSIBILITY_WEIGHTS))
    dependency_weights: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_DEPENDENCY_WEIGHTS))
    uc4_coefficients: tuple[float, float, float] = (1.0, 0.0, 1.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "responsibility_weights", dict(self.responsibility_weights))
        object.__setattr__(self, "dependency_weights", dict(self.dependency_weights))
        coeffs = tuple(float(c) for c in self.uc4_coefficients)
        if len(coeffs) != 3:
            raise InvalidConfig("uc4_coefficients needs exactly three values")
        object.__setattr__(self, "uc4_coefficients", coeffs)
        for table in (self.responsibility_weights, self.dependency_weights):
            for key, weight in table.items():
                if float(weight) < 0:
                    raise InvalidConfig(f"weight for {key!r} is negative")
        if any(c < 0 for c in coeffs):
            raise InvalidConfig("uc4 coefficients must be non-negative")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any] | None) -> WeightConfig:
        data = dict(data or {})
        unknown = set(data) - {"responsibility_weights", "dependency_weights", "uc4_coefficients"}
        if unknown:
            raise InvalidConfig(f"unknown weights keys: {sorted(unknown)}")
        resp = dict(DEFAULT_RESPONSIBILITY_WEIGHTS)
        resp.update(data.get("responsibility_weights") or {})
        deps = dict(DEFAULT_DEPENDENCY_WEIGHTS)
        deps.update(data.get("dependency_weights") or {})
        try:
            return cls(
                {k: float(v) for k, v in resp.items()},
                {k: float(v) for k, v in deps.items()},
                tuple(data.get("uc4_coefficients", (1.0, 0.0, 1.0))),
            )
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(f"bad weights section: {exc}") from None

    def responsibility(self, visibility: str) -> float:
        try:
            return self.responsibility_weights[visibility]
        except KeyError:
            raise InvalidConfig(f"no responsibility weight for visibility {visibility!r}") from None

    def as_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["uc4_coefficients"] = list(self.uc4_coefficients)
        return out


@dataclass(frozen=True)
class ClassMetrics:
    num_attr: int
    num_ops: int
    num_inherited_attr: int
    num_ancestors: int
    num_desc: int
    num_interfaces_impl: int
    cl1: float
    cl2: float
    cl3: int
    cl4: int
    cl5: int


@dataclass(frozen=True)
class PackageMetrics:
    pk1: int
    pk2: float
    pk3: int


@dataclass(frozen=True)
class ModelTotals:
    nc: int
    np: int
    cross_package_relations: int


@dataclass(frozen=True)
class UseCaseCounts:
    ext_pts: int
    includes: int
    extends: int


@dataclass(frozen=True)
class UseCaseMetrics:
    na: int
    uc1: int
    uc2: int
    uc3: int
    uc4: float
    per_usecase: Mapping[str, UseCaseCounts]


def outgoing_relations(model: UmlModel, class_id: str) -> list[tuple[str, str]]:
    """``(relation kind, relation id)`` for relations the class takes part in as source.

    Associations are undirected and count once for every class at an end.
    """
    out: list[tuple[str, str]] = []
    for assoc in model.indices.associations.get(class_id, ()):
        out.append(("association", assoc))
    for dep in model.indices.dependencies_from.get(class_id, ()):
        out.append(("dependency", dep))
    for gen in model.children(class_id, K.GENERALIZATION):
        if gen.ref("general") is not None:
            out.append(("generalization", gen.id))
    for real in model.children(class_id, K.INTERFACE_REALIZATION):
        if real.ref("contract") is not None:
            out.append(("realization", real.id))
    return out


def cl1(model: UmlModel, class_id: str, weights: WeightConfig) -> float:
    members = model.children(class_id, K.ATTRIBUTE, K.OPERATION)
    return sum((weights.responsibility(m.visibility) for m in members), 0.0)


def cl2(model: UmlModel, class_id: str, weights: WeightConfig) -> float:
    return sum((weights.dependency_weights.get(kind, 0.0)
                for kind, _ in outgoing_relations(model, class_id)), 0.0)


def interfaces_implemented(model: UmlModel, class_id: str) -> set[str]:
    return {contract for contract in model.indices.realizations.get(class_id, ())
            if model.elements[contract].kind is K.INTERFACE}


def class_metrics(model: UmlModel, class_id: str, weights: WeightConfig | None = None) -> ClassMetrics:
    weights = weights or WeightConfig()
    model.get(class_id, *CLASSIFIERS)
    ancestors = model.ancestors(class_id)
    children, desc = ck.noc(model, class_id)
    return ClassMetrics(
        num_attr=len(model.children(class_id, K.ATTRIBUTE)),
        num_ops=len(model.children(class_id, K.OPERATION)),
        num_inherited_attr=sum(len(model.children(a, K.ATTRIBUTE)) for a in ancestors),
        num_ancestors=len(ancestors),
        num_desc=desc,
        num_interfaces_impl=len(interfaces_implemented(model, class_id)),
        cl1=cl1(model, class_id, weights),
        cl2=cl2(model, class_id, weights),
        cl3=ck.dit(model, class_id),
        cl4=children,
        cl5=len(model.referenced_classes(class_id)),
    )


def package_of(model: UmlModel, element_id: str) -> str | None:
    pkg = model.enclosing(element_id, K.PACKAGE)
    return pkg.id if pkg is not None else None


def relation_ends(model: UmlModel, relation_id: str) -> tuple[str, str] | None:
    """``(source, target)`` element ids of a binary class-level relation."""
    rel = model.elements[relation_id]
    if rel.kind is K.ASSOCIATION:
        ends = rel.ref_list("ends")
        return (ends[0], ends[1]) if len(ends) >= 2 else None
    if rel.kind is K.GENERALIZATION:
        pair = rel.ref("specific"), rel.ref("general")
    elif rel.kind is K.INTERFACE_REALIZATION:
        pair = rel.ref("client"), rel.ref("contract")
    elif rel.kind is K.DEPENDENCY:
        clients, suppliers = rel.ref_list("clients"), rel.ref_list("suppliers")
        pair = (clients[0] if clients else None), (suppliers[0] if suppliers else None)
    else:
        return None
    return pair if None not in pair else None


_COUPLING_KINDS = (K.ASSOCIATION, K.GENERALIZATION, K.INTERFACE_REALIZATION, K.DEPENDENCY)


def cross_package_relations(model: UmlModel) -> list[tuple[str, str | None, str | None]]:
    """``(relation id, source package, target package)`` for every cross-package relation."""
    out = []
    for rel in model.of_kind(*_COUPLING_KINDS):
        ends = relation_ends(model, rel.id)
        if ends is None:
            continue
        src, dst = (package_of(model, e) for e in ends)
        if src != dst:
            out.append((rel.id, src, dst))
    return out


def package_metrics(model: UmlModel, package_id: str, weights: WeightConfig | None = None) -> PackageMetrics:
    weights = weights or WeightConfig()
    model.get(package_id, K.PACKAGE)
    classes = model.children(package_id, K.CLASS)
    return PackageMetrics(
        pk1=len(classes),
        pk2=sum((cl1(model, c.id, weights) for c in classes), 0.0),
        pk3=sum(1 for _, src, _ in cross_package_relations(model) if src == package_id),
    )


def model_totals(model: UmlModel) -> ModelTotals:
    return ModelTotals(
        nc=len(model.of_kind(K.CLASS)),
        np=len(model.of_kind(K.PACKAGE)),
        cross_package_relations=len(cross_package_relations(model)),
    )


def communications(model: UmlModel) -> list[tuple[str, str, str]]:
    """``(association id, actor id, use case id)`` for actor/use-case links."""
    links = []
    for assoc in model.of_kind(K.ASSOCIATION):
        ends = assoc.ref_list("ends")
        actors = [e for e in ends if model.elements[e].kind is K.ACTOR]
        cases = [e for e in ends if model.elements[e].kind is K.USE_CASE]
        for actor in actors:
            for case in cases:
                links.append((assoc.id, actor, case))
    return links


def usecase_counts(model: UmlModel, usecase_id: str) -> UseCaseCounts:
    model.get(usecase_id, K.USE_CASE)
    return UseCaseCounts(
        ext_pts=len(model.children(usecase_id, K.EXTENSION_POINT)),
        includes=len(model.children(usecase_id, K.INCLUDE)),
        extends=len(model.children(usecase_id, K.EXTEND)),
    )


def usecase_metrics(model: UmlModel, weights: WeightConfig | None = None) -> UseCaseMetrics:
    weights = weights or WeightConfig()
    links = communications(model)
    uc1 = len(model.of_kind(K.USE_CASE))
    uc2 = len(links)
    uc3 = len({(actor, case) for _, actor, case in links})
    alpha, beta, gamma = weights.uc4_coefficients
    return UseCaseMetrics(
        na=len(model.of_kind(K.ACTOR)),
        uc1=uc1,
        uc2=uc2,
        uc3=uc3,
        uc4=alpha * uc1 + beta * uc2 + gamma * uc3,
        per_usecase={u.id: usecase_counts(model, u.id) for u in model.of_kind(K.USE_CASE)},
    )
