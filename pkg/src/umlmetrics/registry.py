"""Metric registry: every metric the tool can tabulate, with catalog metadata."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Iterable, Iterator

from . import behavior, ck, structural
from .errors import ScopeError
from .model import ElementKind, UmlModel
from .structural import WeightConfig

K = ElementKind

MODEL_SCOPE = "Model"
WEIGHTS_NOTE = "weights from the weights configuration section"
MODEL_ROW_ID = "(model)"
SCOPES = tuple(k.value for k in ElementKind) + (MODEL_SCOPE,)

REFERENCES = {
    "CK94": "S. R. Chidamber, C. F. Kemerer. A Metrics Suite for Object Oriented Design. "
            "IEEE TSE 20(6), 1994.",
    "McCabe76": "T. J. McCabe. A Complexity Measure. IEEE TSE 2(4), 1976.",
    "Marchesi98": "M. Marchesi. OOA Metrics for the Unified Modeling Language. CSMR 1998.",
    "Karner93": "G. Karner. Resource Estimation for Objectory Projects. 1993.",
    "SDMetrics": "J. Wuest. SDMetrics - the software design metrics tool for the UML.",
}


class MetricContext:
    """Per-model evaluation state shared by all metric computations."""

    def __init__(self, model: UmlModel, weights: WeightConfig | None = None):
        self.model = model
        self.weights = weights or WeightConfig()

    @cached_property
    def usage(self) -> dict:
        return ck.derive_usage_map(self.model)

    @cached_property
    def totals(self) -> structural.ModelTotals:
        return structural.model_totals(self.model)

    @cached_property
    def usecases(self) -> structural.UseCaseMetrics:
        return structural.usecase_metrics(self.model, self.weights)

    @cached_property
    def cross_relations(self) -> list:
        return structural.cross_package_relations(self.model)

    def statechart(self, sm_id: str) -> behavior.StatechartMetrics:
        cache = self.__dict__.setdefault("_statecharts", {})
        if sm_id not in cache:
            cache[sm_id] = behavior.statechart_metrics(self.model, sm_id)
        return cache[sm_id]

    def activity(self, act_id: str) -> behavior.ActivityMetrics:
        cache = self.__dict__.setdefault("_activities", {})
        if act_id not in cache:
            cache[act_id] = behavior.activity_metrics(self.model, act_id)
        return cache[act_id]


Compute = Callable[[MetricContext, str], Any]


@dataclass(frozen=True)
class MetricSpec:
    name: str
    scope: str
    compute: Compute = field(repr=False, compare=False)
    description: str = ""
    formula: str = ""
    references: tuple[str, ...] = ()
    builtin: bool = True

    def catalog_entry(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "scope": self.scope,
            "description": self.description,
            "formula": self.formula,
            "references": list(self.references),
            "builtin": self.builtin,
        }


class MetricRegistry:
    def __init__(self, specs: Iterable[MetricSpec] = ()):
        self._specs: dict[str, MetricSpec] = {}
        for spec in specs:
            self.register(spec)

    def register(self, spec: MetricSpec) -> None:
        if spec.name in self._specs:
            raise ValueError(f"metric {spec.name!r} is already registered")
        if spec.scope not in SCOPES:
            raise ScopeError(f"unknown scope {spec.scope!r} for metric {spec.name!r}")
        self._specs[spec.name] = spec

    def copy(self) -> MetricRegistry:
        return MetricRegistry(self._specs.values())

    def __contains__(self, name: object) -> bool:
        return name in self._specs

    def __getitem__(self, name: str) -> MetricSpec:
        return self._specs[name]

    def __iter__(self) -> Iterator[MetricSpec]:
        return iter(self._specs.values())

    def __len__(self) -> int:
        return len(self._specs)

    def names(self, scope: str | None = None) -> list[str]:
        return [s.name for s in self._specs.values() if scope is None or s.scope == scope]

    def scopes(self) -> list[str]:
        return list(dict.fromkeys(s.scope for s in self._specs.values()))


def _class_metric(ctx: MetricContext, class_id: str) -> structural.ClassMetrics:
    cache = ctx.__dict__.setdefault("_class_metrics", {})
    if class_id not in cache:
        cache[class_id] = structural.class_metrics(ctx.model, class_id, ctx.weights)
    return cache[class_id]


def _pkg_metric(ctx: MetricContext, pkg_id: str) -> structural.PackageMetrics:
    cache = ctx.__dict__.setdefault("_pkg_metrics", {})
    if pkg_id not in cache:
        model = ctx.model
        classes = model.children(pkg_id, K.CLASS)
        cache[pkg_id] = structural.PackageMetrics(
            pk1=len(classes),
            pk2=sum((_class_metric(ctx, c.id).cl1 for c in classes), 0.0),
            pk3=sum(1 for _, src, _ in ctx.cross_relations if src == pkg_id),
        )
    return cache[pkg_id]


def _builtin_specs() -> list[MetricSpec]:
    C, P, U = K.CLASS.value, K.PACKAGE.value, K.USE_CASE.value
    SM, A, M = K.STATE_MACHINE.value, K.ACTIVITY.value, MODEL_SCOPE

    def cm(attr):
        return lambda ctx, el: getattr(_class_metric(ctx, el), attr)

    def pm(attr):
        return lambda ctx, el: getattr(_pkg_metric(ctx, el), attr)

    def sm(attr):
        return lambda ctx, el: getattr(ctx.statechart(el), attr)

    def am(attr):
        return lambda ctx, el: getattr(ctx.activity(el), attr)

    def uc(attr):
        return lambda ctx, el: getattr(structural.usecase_counts(ctx.model, el), attr)

    return [
        # class size
        MetricSpec("NumAttr", C, cm("num_attr"), "Number of attributes owned by the class.",
                   "count(owned attributes)", ("SDMetrics",)),
        MetricSpec("NumOps", C, cm("num_ops"), "Number of operations owned by the class.",
                   "count(owned operations)", ("SDMetrics",)),
        MetricSpec("NumInhAttr", C, cm("num_inherited_attr"),
                   "Number of attributes inherited from all ancestors.",
                   "sum over ancestors of NumAttr", ("SDMetrics",)),
        MetricSpec("NumAnc", C, cm("num_ancestors"), "Number of ancestor classes.",
                   "|transitive generalization targets|", ("SDMetrics",)),
        MetricSpec("NumDesc", C, cm("num_desc"), "Number of descendant classes.",
                   "|transitive specializations|", ("CK94", "SDMetrics")),
        MetricSpec("NumInterfaces", C, cm("num_interfaces_impl"),
                   "Number of interfaces the class implements.",
                   "|realized interfaces|", ("SDMetrics",)),
        # CK
        MetricSpec("WMC1", C, lambda ctx, el: ck.wmc1(ctx.model, el),
                   "Weighted methods per class, each method weighted 1.",
                   "count(owned operations)", ("CK94",)),
        MetricSpec("WMC_cc", C, lambda ctx, el: ck.wmc_cc(ctx.model, el),
                   "Weighted methods per class, each method weighted by the cyclomatic "
                   "complexity of its attached behavior (1 when none).",
                   "sum over operations of (decision points + 1)", ("CK94", "McCabe76")),
        MetricSpec("DIT", C, lambda ctx, el: ck.dit(ctx.model, el),
                   "Depth of inheritance tree: longest path to a root class.",
                   "max over parents of (DIT(parent) + 1); 0 for roots", ("CK94",)),
        MetricSpec("NOC", C, lambda ctx, el: ck.noc(ctx.model, el)[0],
                   "Number of immediate subclasses.", "|direct specializations|", ("CK94",)),
        MetricSpec("RFC", C, lambda ctx, el: ck.rfc(ctx.model, el),
                   "Response for a class: owned operations plus distinct operations invoked "
                   "by messages sent from the class's lifelines. n/a without interactions.",
                   "|owned ops U invoked ops|", ("CK94",)),
        MetricSpec("CBO", C, lambda ctx, el: ck.cbo(ctx.model, el),
                   "Coupling between object classes: distinct classifiers referenced through "
                   "attributes, parameters, associations and sent messages.",
                   "|referenced classes U message targets| (self excluded)", ("CK94",)),
        MetricSpec("LCOM", C, lambda ctx, el: ck.lcom(ctx.model, el, ctx.usage),
                   "Lack of cohesion in methods (LCOM1) from attribute-usage evidence. "
                   "n/a when the class has no usage evidence.",
                   "max(P - Q, 0); P disjoint pairs, Q sharing pairs", ("CK94",)),
        # Marchesi class metrics
        MetricSpec("CL1", C, cm("cl1"), "Weighted number of class responsibilities.",
                   "sum over owned attributes and operations of weight(visibility); "
                   + WEIGHTS_NOTE, ("Marchesi98",)),
        MetricSpec("CL2", C, cm("cl2"), "Weighted number of class dependencies.",
                   "sum over outgoing relations of weight(relation kind); " + WEIGHTS_NOTE,
                   ("Marchesi98",)),
        MetricSpec("CL3", C, cm("cl3"), "Depth of inheritance tree.", "DIT", ("Marchesi98",)),
        MetricSpec("CL4", C, cm("cl4"), "Number of immediate subclasses.", "NOC", ("Marchesi98",)),
        MetricSpec("CL5", C, cm("cl5"), "Number of distinct classes referenced.",
                   "|referenced classes| (no behavioral evidence)", ("Marchesi98",)),
        # packages
        MetricSpec("PK1", P, pm("pk1"), "Number of classes directly owned by the package.",
                   "count(owned classes)", ("Marchesi98",)),
        MetricSpec("PK2", P, pm("pk2"), "Weighted responsibilities of the package's classes.",
                   "sum over owned classes of CL1", ("Marchesi98",)),
        MetricSpec("PK3", P, pm("pk3"),
                   "Coupling to other packages: relations whose source end is in this package "
                   "and whose target end is in another.",
                   "count(cross-package relations sourced here)", ("Marchesi98",)),
        # use cases
        MetricSpec("ExtPts", U, uc("ext_pts"), "Number of extension points of the use case.",
                   "count(extension points)", ("SDMetrics",)),
        MetricSpec("Includes", U, uc("includes"), "Number of use cases this use case includes.",
                   "count(include relationships)", ("SDMetrics",)),
        MetricSpec("Extends", U, uc("extends"), "Number of use cases this use case extends.",
                   "count(extend relationships)", ("SDMetrics",)),
        # state machines
        MetricSpec("States", SM, sm("states"), "Number of states (pseudostates excluded).",
                   "count(states)", ("SDMetrics",)),
        MetricSpec("RawStates", SM, sm("raw_states"), "Number of vertices including pseudostates.",
                   "count(states) + count(pseudostates)", ("SDMetrics",)),
        MetricSpec("TTrigger", SM, sm("ttrigger"), "Number of triggers on transitions.",
                   "count(trigger elements)", ("SDMetrics",)),
        MetricSpec("TGuard", SM, sm("tguard"), "Number of transitions with a guard.",
                   "count(guarded transitions)", ("SDMetrics",)),
        MetricSpec("TEffects", SM, sm("teffects"), "Number of transitions with an effect.",
                   "count(transitions with effect)", ("SDMetrics",)),
        MetricSpec("EntryActions", SM, sm("entry_actions"), "Number of entry actions.",
                   "count(states with entry behavior)", ("SDMetrics",)),
        MetricSpec("ExitActions", SM, sm("exit_actions"), "Number of exit actions.",
                   "count(states with exit behavior)", ("SDMetrics",)),
        MetricSpec("Transitions", SM, sm("transitions"), "Number of transitions.",
                   "count(transitions)", ("SDMetrics",)),
        MetricSpec("Activities", SM, sm("activities"), "Number of do-activities.",
                   "count(states with do-activity)", ("SDMetrics",)),
        # activities
        MetricSpec("Actions", A, am("actions"), "Number of actions.", "count(actions)",
                   ("SDMetrics",)),
        MetricSpec("ObjectNodes", A, am("object_nodes"), "Number of object nodes (pins excluded).",
                   "count(object nodes)", ("SDMetrics",)),
        MetricSpec("Pins", A, am("pins"), "Number of pins on the activity's actions.",
                   "count(pins)", ("SDMetrics",)),
        MetricSpec("Guards", A, am("guards"), "Number of guarded control and object flows.",
                   "count(flows with a non-trivial guard)", ("SDMetrics",)),
        MetricSpec("Partitions", A, am("partitions"), "Number of activity partitions.",
                   "count(partitions)", ("SDMetrics",)),
        MetricSpec("ObjectFlows", A, am("object_flows"), "Number of object flows.",
                   "count(object flows)", ("SDMetrics",)),
        MetricSpec("ExceptionHandlers", A, am("exception_handlers"), "Number of exception handlers.",
                   "count(exception handlers)", ("SDMetrics",)),
        MetricSpec("CC", A, lambda ctx, el: ck.cyclomatic_of_behavior(ctx.model, el),
                   "Cyclomatic complexity of the activity.",
                   "sum over decision nodes of (outgoing - 1) + 1", ("McCabe76",)),
        # whole model
        MetricSpec("NC", M, lambda ctx, el: ctx.totals.nc, "Number of classes.",
                   "count(classes)", ("Marchesi98",)),
        MetricSpec("NP", M, lambda ctx, el: ctx.totals.np, "Number of packages (nested included).",
                   "count(packages)", ("Marchesi98",)),
        MetricSpec("PKX", M, lambda ctx, el: ctx.totals.cross_package_relations,
                   "Cross-package relations, each counted once.",
                   "count(relations with ends in different packages)", ("Marchesi98",)),
        MetricSpec("NA", M, lambda ctx, el: ctx.usecases.na, "Number of actors.",
                   "count(actors)", ("Marchesi98",)),
        MetricSpec("UC1", M, lambda ctx, el: ctx.usecases.uc1, "Number of use cases.",
                   "count(use cases)", ("Marchesi98",)),
        MetricSpec("UC2", M, lambda ctx, el: ctx.usecases.uc2,
                   "Actor/use-case communications, duplicates included.",
                   "count(actor-use case associations)", ("Marchesi98",)),
        MetricSpec("UC3", M, lambda ctx, el: ctx.usecases.uc3,
                   "Actor/use-case communications without redundancies.",
                   "count(distinct (actor, use case) pairs)", ("Marchesi98",)),
        MetricSpec("UC4", M, lambda ctx, el: ctx.usecases.uc4, "Global use-case complexity.",
                   "a*UC1 + b*UC2 + c*UC3; coefficients from the weights section",
                   ("Marchesi98",)),
    ]


def builtin_registry() -> MetricRegistry:
    return MetricRegistry(_builtin_specs())


def scope_rows(model: UmlModel, scope: str) -> list[str]:
    """Element ids a table of ``scope`` has rows for."""
    if scope == MODEL_SCOPE:
        return [MODEL_ROW_ID]
    try:
        kind = ElementKind(scope)
    except ValueError:
        raise ScopeError(f"unknown scope {scope!r}") from None
    return [el.id for el in model.of_kind(kind)]
