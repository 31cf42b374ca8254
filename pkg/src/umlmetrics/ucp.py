"""Use Case Points effort and cost estimation.

Use cases and actors are weighted by a user-supplied complexity class (from
an annotation mapping or a ``complexity`` tagged value in the model).  The
unadjusted total is scaled by the technical and environmental complexity
factors, then converted to working hours and cost::

    UUCP  = UAW + UUCW
    TCF   = 0.6 + 0.01 * sum(weight * rating)   over 13 technical factors
    ECF   = 1.4 - 0.03 * sum(weight * rating)   over 8 environmental factors
    UCP   = UUCP * TCF * ECF
    hours = UCP * hours_per_ucp
    cost  = hours * hourly_rate
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

from .errors import InvalidAnnotation, InvalidConfig, InvalidFilter, NothingToEstimate
from .model import ElementKind, UmlModel
from .structural import communications

K = ElementKind

USECASE_LEVELS = ("low", "medium", "high")
ACTOR_LEVELS = ("simple", "average", "complex")
DEFAULT_USECASE_LEVEL = "medium"
DEFAULT_ACTOR_LEVEL = "average"
COMPLEXITY_TAG = "complexity"


@dataclass(frozen=True)
class Factor:
    code: str
    name: str
    weight: float
    rating: float = 3.0


TECHNICAL_FACTORS = (
    ("T1", "Distributed system", 2.0),
    ("T2", "Response time or throughput objectives", 1.0),
    ("T3", "End-user efficiency", 1.0),
    ("T4", "Complex internal processing", 1.0),
    ("T5", "Reusable code", 1.0),
    ("T6", "Easy to install", 0.5),
    ("T7", "Easy to use", 0.5),
    ("T8", "Portable", 2.0),
    ("T9", "Easy to change", 1.0),
    ("T10", "Concurrent", 1.0),
    ("T11", "Special security features", 1.0),
    ("T12", "Direct access for third parties", 1.0),
    ("T13", "Special user training required", 1.0),
)

ENVIRONMENT_FACTORS = (
    ("E1", "Familiarity with the development process", 1.5),
    ("E2", "Application experience", 0.5),
    ("E3", "Object-oriented experience", 1.0),
    ("E4", "Lead analyst capability", 0.5),
    ("E5", "Motivation", 1.0),
    ("E6", "Stable requirements", 2.0),
    ("E7", "Part-time workers", -1.0),
    ("E8", "Difficult programming language", -1.0),
)


def _factors(table, ratings: Mapping[str, float] | None, default: float) -> tuple[Factor, ...]:
    ratings = dict(ratings or {})
    known = {code for code, _, _ in table}
    unknown = set(ratings) - known
    if unknown:
        raise InvalidConfig(f"unknown factor codes: {sorted(unknown)}")
    return tuple(Factor(code, name, weight, float(ratings.get(code, default)))
                 for code, name, weight in table)


@dataclass(frozen=True)
class UcpConfig:
    actor_weights: Mapping[str, float] = field(
        default_factory=lambda: {"simple": 1.0, "average": 2.0, "complex": 3.0})
    usecase_weights: Mapping[str, float] = field(
        default_factory=lambda: {"low": 5.0, "medium": 10.0, "high": 15.0})
    technical_factors: tuple[Factor, ...] = field(
        default_factory=lambda: _factors(TECHNICAL_FACTORS, None, 3.0))
    environment_factors: tuple[Factor, ...] = field(
        default_factory=lambda: _factors(ENVIRONMENT_FACTORS, None, 3.0))
    hours_per_ucp: float = 20.0
    hourly_rate: float = 10.0
    currency: str = "EUR"

    def __post_init__(self) -> None:
        if set(self.actor_weights) != set(ACTOR_LEVELS):
            raise InvalidConfig(f"actor_weights must define exactly {ACTOR_LEVELS}")
        if set(self.usecase_weights) != set(USECASE_LEVELS):
            raise InvalidConfig(f"usecase_weights must define exactly {USECASE_LEVELS}")
        if len(self.technical_factors) != 13:
            raise InvalidConfig("exactly 13 technical factors are required")
        if len(self.environment_factors) != 8:
            raise InvalidConfig("exactly 8 environment factors are required")
        for f in self.technical_factors + self.environment_factors:
            if not 0 <= f.rating <= 5:
                raise InvalidConfig(f"rating of {f.code} is {f.rating}, outside [0, 5]")
        if not self.hours_per_ucp > 0:
            raise InvalidConfig("hours_per_ucp must be positive")
        if self.hourly_rate < 0:
            raise InvalidConfig("hourly_rate must be non-negative")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any] | None) -> UcpConfig:
        data = dict(data or {})
        allowed = {"actor_weights", "usecase_weights", "technical_ratings", "environment_ratings",
                   "default_rating", "hours_per_ucp", "hourly_rate", "currency"}
        unknown = set(data) - allowed
        if unknown:
            raise InvalidConfig(f"unknown ucp keys: {sorted(unknown)}")
        try:
            default = float(data.get("default_rating", 3.0))
            base = cls()
            kwargs: dict[str, Any] = {
                "technical_factors": _factors(TECHNICAL_FACTORS, data.get("technical_ratings"), default),
                "environment_factors": _factors(ENVIRONMENT_FACTORS, data.get("environment_ratings"), default),
            }
            if "actor_weights" in data:
                kwargs["actor_weights"] = {**base.actor_weights,
                                           **{k: float(v) for k, v in data["actor_weights"].items()}}
            if "usecase_weights" in data:
                kwargs["usecase_weights"] = {**base.usecase_weights,
                                             **{k: float(v) for k, v in data["usecase_weights"].items()}}
            for key in ("hours_per_ucp", "hourly_rate"):
                if key in data:
                    kwargs[key] = float(data[key])
            if "currency" in data:
                kwargs["currency"] = str(data["currency"])
        except (TypeError, ValueError, AttributeError) as exc:
            raise InvalidConfig(f"bad ucp section: {exc}") from None
        return cls(**kwargs)

    def with_ratings(self, technical: Sequence[float] | None = None,
                     environment: Sequence[float] | None = None) -> UcpConfig:
        tf, ef = self.technical_factors, self.environment_factors
        if technical is not None:
            tf = tuple(replace(f, rating=float(r)) for f, r in zip(tf, technical, strict=True))
        if environment is not None:
            ef = tuple(replace(f, rating=float(r)) for f, r in zip(ef, environment, strict=True))
        return replace(self, technical_factors=tf, environment_factors=ef)

    def as_dict(self) -> dict[str, Any]:
        return {
            "actor_weights": dict(self.actor_weights),
            "usecase_weights": dict(self.usecase_weights),
            "technical_factors": [vars(f) for f in self.technical_factors],
            "environment_factors": [vars(f) for f in self.environment_factors],
            "hours_per_ucp": self.hours_per_ucp,
            "hourly_rate": self.hourly_rate,
            "currency": self.currency,
        }


def tcf(config: UcpConfig) -> float:
    return 0.6 + 0.01 * sum(f.weight * f.rating for f in config.technical_factors)


def ecf(config: UcpConfig) -> float:
    return 1.4 - 0.03 * sum(f.weight * f.rating for f in config.environment_factors)


def _lookup(annotations: Mapping[str, str] | None, el) -> str | None:
    if annotations:
        if el.id in annotations:
            return annotations[el.id]
        if el.name is not None and el.name in annotations:
            return annotations[el.name]
    return el.tags.get(COMPLEXITY_TAG)


def _classify(model, element_id, kind, levels, default, annotations, warnings):
    el = model.get(element_id, kind)
    level = _lookup(annotations, el)
    if level is None:
        if warnings is not None:
            warnings.append(f"{kind.value} {model.label(element_id)!r} has no complexity "
                            f"annotation; assuming {default}")
        return default
    level = str(level).strip().lower()
    if level not in levels:
        raise InvalidAnnotation(
            f"{kind.value} {model.label(element_id)!r}: complexity {level!r} not one of {levels}")
    return level


def classify_usecase(model: UmlModel, usecase_id: str, annotations: Mapping[str, str] | None = None,
                     warnings: list[str] | None = None) -> str:
    """Complexity class of a use case: annotation, then model tag, then ``medium``."""
    return _classify(model, usecase_id, K.USE_CASE, USECASE_LEVELS, DEFAULT_USECASE_LEVEL,
                     annotations, warnings)


def classify_actor(model: UmlModel, actor_id: str, annotations: Mapping[str, str] | None = None,
                   warnings: list[str] | None = None) -> str:
    return _classify(model, actor_id, K.ACTOR, ACTOR_LEVELS, DEFAULT_ACTOR_LEVEL,
                     annotations, warnings)


@dataclass(frozen=True)
class UseCaseFilter:
    """Selects use cases by id/name list and/or a regular expression over names.

    A use case is selected when it is listed or its name matches; an empty
    filter selects everything.
    """

    ids: frozenset[str] | None = None
    pattern: str | None = None

    def __post_init__(self) -> None:
        if self.ids is not None:
            object.__setattr__(self, "ids", frozenset(self.ids))
        if self.pattern is not None:
            try:
                re.compile(self.pattern)
            except re.error as exc:
                raise InvalidFilter(f"invalid use-case pattern {self.pattern!r}: {exc}") from None

    @property
    def is_empty(self) -> bool:
        return self.ids is None and self.pattern is None

    def select(self, usecases: Iterable) -> list:
        if self.is_empty:
            return list(usecases)
        regex = re.compile(self.pattern) if self.pattern is not None else None
        out = []
        for uc in usecases:
            listed = self.ids is not None and (uc.id in self.ids or uc.name in self.ids)
            matched = regex is not None and uc.name is not None and regex.search(uc.name) is not None
            if listed or matched:
                out.append(uc)
        return out


@dataclass(frozen=True)
class Contribution:
    id: str
    name: str | None
    complexity: str
    weight: float


@dataclass(frozen=True)
class UcpResult:
    uaw: float
    uucw: float
    uucp: float
    tcf: float
    ecf: float
    ucp: float
    hours: float
    cost: float
    currency: str
    hours_per_ucp: float
    hourly_rate: float
    usecases: tuple[Contribution, ...] = ()
    actors: tuple[Contribution, ...] = ()
    warnings: tuple[str, ...] = ()

    def formula_chain(self) -> list[str]:
        return [
            f"UAW   = {self.uaw:g}",
            f"UUCW  = {self.uucw:g}",
            f"UUCP  = UAW + UUCW = {self.uaw:g} + {self.uucw:g} = {self.uucp:g}",
            f"TCF   = 0.6 + 0.01 * sum(Wt * Rt) = {self.tcf:.4f}",
            f"ECF   = 1.4 - 0.03 * sum(We * Re) = {self.ecf:.4f}",
            f"UCP   = UUCP * TCF * ECF = {self.uucp:g} * {self.tcf:.4f} * {self.ecf:.4f} = {self.ucp:.4f}",
            f"hours = UCP * {self.hours_per_ucp:g} h/UCP = {self.hours:.2f}",
            f"cost  = hours * {self.hourly_rate:g} {self.currency}/h = {self.cost:.2f} {self.currency}",
        ]

    def as_dict(self) -> dict[str, Any]:
        return {
            "uaw": self.uaw, "uucw": self.uucw, "uucp": self.uucp,
            "tcf": self.tcf, "ecf": self.ecf, "ucp": self.ucp,
            "hours": self.hours, "cost": self.cost, "currency": self.currency,
            "hours_per_ucp": self.hours_per_ucp, "hourly_rate": self.hourly_rate,
            "usecases": [vars(c) for c in self.usecases],
            "actors": [vars(c) for c in self.actors],
            "warnings": list(self.warnings),
        }


def estimate(model: UmlModel, config: UcpConfig | None = None, filter: UseCaseFilter | None = None,
             annotations: Mapping[str, str] | None = None) -> UcpResult:
    """Estimate effort for the selected use cases.

    Actors count when they communicate with at least one selected use case.
    """
    config = config or UcpConfig()
    filter = filter or UseCaseFilter()
    selected = filter.select(model.of_kind(K.USE_CASE))
    if not selected:
        raise NothingToEstimate("no use case left to estimate after filtering")
    warnings: list[str] = []
    usecases = []
    for uc in selected:
        level = classify_usecase(model, uc.id, annotations, warnings)
        usecases.append(Contribution(uc.id, uc.name, level, config.usecase_weights[level]))
    chosen = {uc.id for uc in selected}
    linked = {actor for _, actor, case in communications(model) if case in chosen}
    actors = []
    for actor in model.of_kind(K.ACTOR):
        if actor.id in linked:
            level = classify_actor(model, actor.id, annotations, warnings)
            actors.append(Contribution(actor.id, actor.name, level, config.actor_weights[level]))

    uaw = sum(a.weight for a in actors)
    uucw = sum(u.weight for u in usecases)
    uucp = uaw + uucw
    t, e = tcf(config), ecf(config)
    ucp = uucp * t * e
    hours = ucp * config.hours_per_ucp
    return UcpResult(
        uaw=uaw, uucw=uucw, uucp=uucp, tcf=t, ecf=e, ucp=ucp,
        hours=hours, cost=hours * config.hourly_rate,
        currency=config.currency, hours_per_ucp=config.hours_per_ucp,
        hourly_rate=config.hourly_rate,
        usecases=tuple(usecases), actors=tuple(actors), warnings=tuple(warnings),
    )
