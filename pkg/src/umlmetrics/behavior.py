"""Statechart and activity diagram censuses."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

from .model import FLOWS, ElementKind, UmlModel

K = ElementKind


@dataclass(frozen=True)
class StatechartMetrics:
    states: int
    ttrigger: int
    tguard: int
    teffects: int
    entry_actions: int
    exit_actions: int
    transitions: int
    activities: int
    # transparency extras
    transitions_with_trigger: int = 0
    pseudostates: Mapping[str, int] = field(default_factory=dict)

    @property
    def raw_states(self) -> int:
        return self.states + sum(self.pseudostates.values())


@dataclass(frozen=True)
class ActivityMetrics:
    actions: int
    object_nodes: int
    pins: int
    guards: int
    partitions: int
    object_flows: int
    exception_handlers: int
    control_flows: int = 0
    decision_nodes: int = 0


def statechart_metrics(model: UmlModel, statemachine_id: str) -> StatechartMetrics:
    model.get(statemachine_id, K.STATE_MACHINE)
    vertices = model.contents(statemachine_id, K.STATE)
    real = [v for v in vertices if v.ref("pseudostate") is None]
    pseudo = Counter(v.ref("pseudostate") for v in vertices if v.ref("pseudostate") is not None)
    transitions = model.contents(statemachine_id, K.TRANSITION)
    triggers = [len(model.children(t.id, K.TRIGGER)) for t in transitions]
    return StatechartMetrics(
        states=len(real),
        ttrigger=sum(triggers),
        tguard=sum(1 for t in transitions if t.flag("guard")),
        teffects=sum(1 for t in transitions if t.flag("effect")),
        entry_actions=sum(1 for s in real if s.flag("entry")),
        exit_actions=sum(1 for s in real if s.flag("exit")),
        transitions=len(transitions),
        activities=sum(1 for s in real if s.flag("do_activity")),
        transitions_with_trigger=sum(1 for n in triggers if n),
        pseudostates=dict(sorted(pseudo.items())),
    )


def activity_metrics(model: UmlModel, activity_id: str) -> ActivityMetrics:
    model.get(activity_id, K.ACTIVITY)
    counts = Counter(el.kind for el in model.contents(activity_id))
    flows = model.contents(activity_id, *FLOWS)
    return ActivityMetrics(
        actions=counts[K.ACTION],
        object_nodes=counts[K.OBJECT_NODE],
        pins=counts[K.PIN],
        guards=sum(1 for f in flows if f.flag("guard")),
        partitions=counts[K.ACTIVITY_PARTITION],
        object_flows=counts[K.OBJECT_FLOW],
        exception_handlers=counts[K.EXCEPTION_HANDLER],
        control_flows=counts[K.CONTROL_FLOW],
        decision_nodes=counts[K.DECISION_NODE],
    )
