"""Metric tables, histograms, design comparison and the metric catalog.

Tables serialize to CSV (for spreadsheets) and JSON (for programs); both keep
a stable column order and render ``Unavailable`` as ``n/a``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence, TextIO

from .errors import NoData, ScopeError
from .model import UmlModel, Unavailable
from .registry import (MODEL_ROW_ID, MODEL_SCOPE, REFERENCES, MetricContext, MetricRegistry,
                       builtin_registry, scope_rows)
from .structural import WeightConfig

NA = "n/a"


@dataclass(frozen=True)
class TableRow:
    id: str
    qualified_name: str
    name: str | None
    values: tuple[Any, ...]


@dataclass(frozen=True)
class MetricTable:
    scope: str
    metrics: tuple[str, ...]
    rows: tuple[TableRow, ...] = ()

    def __post_init__(self) -> None:
        width = len(self.metrics)
        for row in self.rows:
            if len(row.values) != width:
                raise ValueError(f"row {row.id!r} has {len(row.values)} values for {width} metrics")

    def column(self, metric: str) -> list[Any]:
        try:
            i = self.metrics.index(metric)
        except ValueError:
            raise ScopeError(f"table has no column {metric!r}") from None
        return [row.values[i] for row in self.rows]

    def value(self, row_id: str, metric: str) -> Any:
        i = self.metrics.index(metric)
        for row in self.rows:
            if row.id == row_id:
                return row.values[i]
        raise KeyError(row_id)

    def as_records(self) -> list[dict[str, Any]]:
        return [
            {"id": r.id, "qualified_name": r.qualified_name, "name": r.name,
             **dict(zip(self.metrics, r.values))}
            for r in self.rows
        ]

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        return {
            "scope": self.scope,
            "metrics": list(self.metrics),
            "rows": [
                {"id": r.id, "qualified_name": r.qualified_name, "name": r.name,
                 "values": {m: _json_value(v) for m, v in zip(self.metrics, r.values)}}
                for r in self.rows
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> MetricTable:
        metrics = tuple(data["metrics"])
        rows = tuple(
            TableRow(r["id"], r["qualified_name"], r.get("name"),
                     tuple(_parse_value(r["values"][m]) for m in metrics))
            for r in data["rows"]
        )
        return cls(data["scope"], metrics, rows)

    def write_csv(self, stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["scope", "id", "qualified_name", "name", *self.metrics])
        for r in self.rows:
            writer.writerow([self.scope, r.id, r.qualified_name, r.name or "",
                             *(_text_value(v) for v in r.values)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    @classmethod
    def read_csv(cls, stream: TextIO | str, scope: str | None = None) -> MetricTable:
        if isinstance(stream, str):
            stream = io.StringIO(stream)
        reader = csv.reader(stream)
        header = next(reader)
        if header[:4] != ["scope", "id", "qualified_name", "name"]:
            raise ValueError("not a metric table: unexpected CSV header")
        metrics = tuple(header[4:])
        rows = []
        scopes = set()
        for line in reader:
            if not line:
                continue
            scopes.add(line[0])
            rows.append(TableRow(line[1], line[2], line[3] or None,
                                 tuple(_parse_value(v) for v in line[4:])))
        if len(scopes) > 1:
            raise ScopeError(f"CSV mixes scopes {sorted(scopes)}")
        found = scopes.pop() if scopes else scope
        if found is None:
            raise ScopeError("empty CSV table: pass the scope explicitly")
        return cls(found, metrics, tuple(rows))


def _json_value(v: Any) -> Any:
    return NA if v is Unavailable else v


def _text_value(v: Any) -> str:
    if v is Unavailable:
        return NA
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(v: Any) -> Any:
    if v is None or v == NA:
        return Unavailable
    if isinstance(v, (int, float)):
        return v
    try:
        return int(v)
    except ValueError:
        return float(v)


def build_table(model: UmlModel, metrics: Sequence[str], scope: str,
                registry: MetricRegistry | None = None, weights: WeightConfig | None = None,
                context: MetricContext | None = None) -> MetricTable:
    """Evaluate ``metrics`` for every element of ``scope``, rows ordered by qualified name."""
    registry = registry if registry is not None else builtin_registry()
    for name in metrics:
        if name not in registry:
            raise ScopeError(f"unknown metric {name!r}")
        if registry[name].scope != scope:
            raise ScopeError(f"metric {name!r} applies to {registry[name].scope}, not {scope}")
    ctx = context or MetricContext(model, weights)
    rows = []
    for el_id in scope_rows(model, scope):
        if el_id == MODEL_ROW_ID:
            qname, name = model.name or MODEL_ROW_ID, model.name
        else:
            qname, name = model.qualified_name(el_id), model.elements[el_id].name
        values = tuple(registry[m].compute(ctx, el_id) for m in metrics)
        rows.append(TableRow(el_id, qname, name, values))
    rows.sort(key=lambda r: (r.qualified_name, r.id))
    return MetricTable(scope, tuple(metrics), tuple(rows))


def build_all_tables(model: UmlModel, registry: MetricRegistry | None = None,
                     weights: WeightConfig | None = None,
                     scopes: Iterable[str] | None = None,
                     metrics: Iterable[str] | None = None) -> dict[str, MetricTable]:
    """One table per scope, each holding every registered metric of that scope."""
    registry = registry if registry is not None else builtin_registry()
    ctx = MetricContext(model, weights)
    wanted = set(metrics) if metrics is not None else None
    out = {}
    for scope in (scopes if scopes is not None else registry.scopes()):
        names = [n for n in registry.names(scope) if wanted is None or n in wanted]
        if names:
            out[scope] = build_table(model, names, scope, registry, context=ctx)
    return out


# -- histograms ------------------------------------------------------------------

@dataclass(frozen=True)
class Histogram:
    metric: str
    bins: tuple[tuple[float, float, int], ...]
    unavailable_count: int = 0

    @property
    def total(self) -> int:
        return sum(c for _, _, c in self.bins) + self.unavailable_count

    def to_json(self) -> dict[str, Any]:
        return {
            "metric": self.metric,
            "bins": [{"lower": lo, "upper": hi, "count": c} for lo, hi, c in self.bins],
            "unavailable": self.unavailable_count,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "lower", "upper", "count"])
        for lo, hi, c in self.bins:
            writer.writerow([self.metric, repr(float(lo)), repr(float(hi)), c])
        writer.writerow([self.metric, NA, NA, self.unavailable_count])
        return buf.getvalue()


def histogram(table: MetricTable, metric: str, bins: int = 10) -> Histogram:
    """Equal-width bins over [min, max] of the available values.

    The last bin is closed on the right.  A column with a single distinct
    value yields one bin of zero width.
    """
    if bins < 1:
        raise ValueError("bin count must be at least 1")
    column = table.column(metric)
    values = [v for v in column if v is not Unavailable]
    missing = len(column) - len(values)
    if not values:
        raise NoData(f"column {metric!r} has no available values")
    lo, hi = min(values), max(values)
    if lo == hi:
        return Histogram(metric, ((lo, hi, len(values)),), missing)
    width = (hi - lo) / bins
    counts = Counter()
    for v in values:
        i = min(int((v - lo) / width), bins - 1)
        counts[i] += 1
    edges = [lo + i * width for i in range(bins)] + [hi]
    return Histogram(metric, tuple((edges[i], edges[i + 1], counts[i]) for i in range(bins)), missing)


# -- design comparison ---------------------------------------------------------

@dataclass(frozen=True)
class MatchedRow:
    qualified_name: str
    old_id: str
    new_id: str
    old: tuple[Any, ...]
    new: tuple[Any, ...]
    delta: tuple[Any, ...]


@dataclass(frozen=True)
class ComparisonReport:
    scope: str
    metrics: tuple[str, ...]
    matched: tuple[MatchedRow, ...]
    added: tuple[str, ...]
    removed: tuple[str, ...]
    ambiguous: tuple[str, ...] = ()
    summary: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)

    def deltas(self) -> dict[str, dict[str, Any]]:
        return {m.qualified_name: dict(zip(self.metrics, m.delta)) for m in self.matched}

    @property
    def unchanged(self) -> bool:
        return (not self.added and not self.removed
                and all(d == 0 for m in self.matched for d in m.delta if d is not Unavailable))

    def to_json(self) -> dict[str, Any]:
        return {
            "scope": self.scope,
            "metrics": list(self.metrics),
            "matched": [
                {"qualified_name": m.qualified_name, "old_id": m.old_id, "new_id": m.new_id,
                 "old": {k: _json_value(v) for k, v in zip(self.metrics, m.old)},
                 "new": {k: _json_value(v) for k, v in zip(self.metrics, m.new)},
                 "delta": {k: _json_value(v) for k, v in zip(self.metrics, m.delta)}}
                for m in self.matched
            ],
            "added": list(self.added),
            "removed": list(self.removed),
            "ambiguous": list(self.ambiguous),
            "summary": {k: dict(v) for k, v in self.summary.items()},
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["status", "qualified_name", "metric", "old", "new", "delta"])
        for m in self.matched:
            for name, o, n, d in zip(self.metrics, m.old, m.new, m.delta):
                writer.writerow(["matched", m.qualified_name, name, _text_value(o),
                                 _text_value(n), _text_value(d)])
        for q in self.added:
            writer.writerow(["added", q, "", "", "", ""])
        for q in self.removed:
            writer.writerow(["removed", q, "", "", "", ""])
        for q in self.ambiguous:
            writer.writerow(["ambiguous", q, "", "", "", ""])
        return buf.getvalue()


def _delta(old: Any, new: Any) -> Any:
    if old is Unavailable or new is Unavailable:
        return Unavailable
    return new - old


def _index(table: MetricTable) -> tuple[dict[str, TableRow], set[str]]:
    counts = Counter(r.qualified_name for r in table.rows)
    unique = {r.qualified_name: r for r in table.rows if counts[r.qualified_name] == 1}
    return unique, {q for q, c in counts.items() if c > 1}


def compare(old: MetricTable, new: MetricTable) -> ComparisonReport:
    """Match rows by qualified name and report per-metric deltas (new - old).

    Names occurring more than once in either table cannot be matched
    reliably and are listed under ``ambiguous`` instead.
    """
    if old.scope != new.scope:
        raise ScopeError(f"cannot compare a {old.scope} table with a {new.scope} table")
    if tuple(old.metrics) != tuple(new.metrics):
        raise ScopeError("tables have different metric sets")
    old_rows, old_dup = _index(old)
    new_rows, new_dup = _index(new)
    ambiguous = old_dup | new_dup
    matched = []
    for qname in sorted(set(old_rows) & set(new_rows) - ambiguous):
        o, n = old_rows[qname], new_rows[qname]
        delta = tuple(_delta(a, b) for a, b in zip(o.values, n.values))
        matched.append(MatchedRow(qname, o.id, n.id, o.values, n.values, delta))
    added = sorted(set(new_rows) - set(old_rows) - ambiguous)
    removed = sorted(set(old_rows) - set(new_rows) - ambiguous)

    summary = {}
    for i, metric in enumerate(old.metrics):
        deltas = [m.delta[i] for m in matched if m.delta[i] is not Unavailable]
        old_vals = [v for v in old.column(metric) if v is not Unavailable]
        new_vals = [v for v in new.column(metric) if v is not Unavailable]
        summary[metric] = {
            "old_total": sum(old_vals),
            "new_total": sum(new_vals),
            "delta_total": sum(deltas),
            "mean_delta": (sum(deltas) / len(deltas)) if deltas else 0,
            "changed": sum(1 for d in deltas if d != 0),
        }
    return ComparisonReport(old.scope, tuple(old.metrics), tuple(matched), tuple(added),
                            tuple(removed), tuple(sorted(ambiguous)), summary)


# -- catalog -------------------------------------------------------------------

GLOSSARY = {
    "Unavailable": "Metric value reported as n/a: the behavioral diagrams the metric needs "
                   "are absent. Distinct from zero.",
    "Pseudostate": "Initial, choice, junction, fork, join or final vertex; not counted in States.",
    "Qualified name": "Package path plus element name, joined with '::'; used to match "
                      "elements across model revisions.",
    "Responsibility": "An owned attribute or operation, weighted by its visibility.",
}


def catalog(registry: MetricRegistry | None = None, *, weights: WeightConfig | None = None,
            ruleset=None, ucp_config=None) -> dict[str, Any]:
    """Catalog document: metric and rule definitions, configuration echo, references."""
    from .rules import BUILTIN_RULES, Ruleset

    registry = registry if registry is not None else builtin_registry()
    weights = weights or WeightConfig()
    ruleset = ruleset or Ruleset()
    rules = [{"id": r.rule_id, "severity": ruleset.severities.get(r.rule_id, r.severity),
              "description": r.description, "builtin": True}
             for r in BUILTIN_RULES.values()]
    for d in ruleset.custom:
        rules.append({"id": d.name, "severity": d.rule.severity,
                      "description": d.description or d.rule.message,
                      "formula": f"{d.render()} {d.rule.op} {d.rule.threshold:g}",
                      "builtin": False})
    used_refs = sorted({ref for spec in registry for ref in spec.references if ref in REFERENCES}
                       | {"Karner93"})
    configuration: dict[str, Any] = {
        "weights": weights.as_dict(),
        "weights_note": "CL1, CL2, PK2 and UC4 weightings are configurable placeholders, "
                        "not published values.",
        "rules": ruleset.as_dict(),
    }
    if ucp_config is not None:
        configuration["ucp"] = ucp_config.as_dict()
    return {
        "metrics": [spec.catalog_entry() for spec in registry],
        "rules": rules,
        "configuration": configuration,
        "references": {k: REFERENCES[k] for k in used_refs},
        "glossary": dict(GLOSSARY),
    }


def dumps(document: Any) -> str:
    return json.dumps(document, indent=2, sort_keys=False, default=_json_default) + "\n"


def _json_default(obj: Any) -> Any:
    if obj is Unavailable:
        return NA
    if isinstance(obj, float) and math.isnan(obj):
        return None
    raise TypeError(f"cannot serialize {type(obj).__name__}")


__all__ = [
    "ComparisonReport",
    "Histogram",
    "MODEL_SCOPE",
    "MatchedRow",
    "MetricTable",
    "TableRow",
    "build_all_tables",
    "build_table",
    "catalog",
    "compare",
    "dumps",
    "histogram",
]
