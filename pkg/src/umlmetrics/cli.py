"""Command-line interface: ``umlmetrics analyze|estimate|rules|compare|catalog``.

Exit codes::

    0  success
    1  usage error (bad flags, unknown metric or scope)
    2  model file unreadable, malformed XML or not XMI
    3  model violates a structural invariant
    4  configuration, definitions, annotation or filter error
    5  rule check produced error-severity findings
    6  estimate: no use case left after filtering
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence, TextIO

import yaml

from . import __version__
from .config import ENV_VAR, Config, load_config
from .dsl import load_definitions, register_definitions
from .errors import (DslParseError, EvaluationError, InvalidAnnotation, InvalidConfig, InvalidFilter,
                     InvalidModel, InvalidRuleset, NoData, NothingToEstimate, NotXmi, ParseError,
                     ScopeError)
from .model import UmlModel
from .registry import MetricRegistry, builtin_registry
from .reporting import MetricTable, build_all_tables, catalog, compare, dumps, histogram
from .rules import Ruleset, has_errors, run_rules
from .ucp import UseCaseFilter, estimate
from .xmi import parse_file

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_MODEL, EXIT_CONFIG, EXIT_RULES, EXIT_NOTHING = range(7)

DEFAULT_SCOPES = ("Class", "Package", "UseCase", "StateMachine", "Activity", "Model")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _warn(stream: TextIO, message: str) -> None:
    print(f"warning: {message}", file=stream)


def _split(values: Sequence[str] | None) -> list[str] | None:
    if not values:
        return None
    out = []
    for v in values:
        out.extend(p.strip() for p in v.split(",") if p.strip())
    return out


# -- loading -------------------------------------------------------------------

def _load_model(path: str, err: TextIO) -> UmlModel:
    if not Path(path).is_file():
        raise CliError(EXIT_PARSE, f"{path}: no such file")
    try:
        model = parse_file(path)
    except ParseError as exc:
        raise CliError(EXIT_PARSE, str(exc)) from None
    except NotXmi as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from None
    except InvalidModel as exc:
        raise CliError(EXIT_MODEL, f"{path}: {exc}") from None
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc.strerror}") from None
    for ref in model.unresolved_refs:
        _warn(err, f"{path}: {ref.element} {ref.role} -> {ref.target} unresolved ({ref.reason})")
    for tag, count in sorted(model.unrecognized.items()):
        _warn(err, f"{path}: skipped {count} element(s) of unsupported type {tag}")
    return model


def _load_config(args: argparse.Namespace, err: TextIO) -> Config:
    path = args.config or os.environ.get(ENV_VAR) or None
    try:
        config = load_config(path)
    except InvalidConfig as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    if path is None:
        _warn(err, "no configuration given; built-in defaults applied")
    return config


def _load_definitions(args: argparse.Namespace, config: Config) -> tuple[list, MetricRegistry]:
    registry = builtin_registry()
    path = getattr(args, "definitions", None) or config.definitions
    if path is None:
        return [], registry
    if not Path(path).is_file():
        raise CliError(EXIT_CONFIG, f"{path}: definitions file not found")
    try:
        defs = load_definitions(path, registry)
    except DslParseError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    return defs, register_definitions(registry, defs)


def _ruleset(config: Config, definitions: list) -> Ruleset:
    try:
        return Ruleset.from_mapping(config.rules, definitions)
    except InvalidRuleset as exc:
        raise CliError(EXIT_CONFIG, f"{config.source or 'config'}: {exc}") from None


def _format(args: argparse.Namespace, config: Config) -> str:
    return args.format or config.output.format


def _write_outputs(out_dir: str | None, files: dict[str, str]) -> None:
    """Write every file at once, after all computation has succeeded."""
    if out_dir is None:
        return
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (target / name).write_text(text, encoding="utf-8")


# -- commands ------------------------------------------------------------------

def cmd_analyze(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    config = _load_config(args, err)
    defs, registry = _load_definitions(args, config)
    model = _load_model(args.model, err)
    fmt = _format(args, config)
    scopes = _split(args.scope)
    metrics = _split(args.metrics)
    if metrics:
        unknown = [m for m in metrics if m not in registry]
        if unknown:
            raise CliError(EXIT_USAGE, f"unknown metric(s): {', '.join(unknown)}")
        if scopes is None:
            scopes = list(dict.fromkeys(registry[m].scope for m in metrics))
        stray = [m for m in metrics if registry[m].scope not in scopes]
        if stray:
            raise CliError(EXIT_USAGE, f"metric(s) {', '.join(stray)} not in the selected scopes")
    if scopes is None:
        scopes = list(DEFAULT_SCOPES) + [s for s in registry.scopes() if s not in DEFAULT_SCOPES]
    bad = [s for s in scopes if s not in registry.scopes()]
    if bad:
        raise CliError(EXIT_USAGE, f"no metrics for scope(s): {', '.join(bad)}")
    try:
        tables = build_all_tables(model, registry, config.weights, scopes, metrics)
    except ScopeError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    except EvaluationError as exc:
        raise CliError(EXIT_CONFIG, f"definitions: {exc}") from None

    bins = args.bins or (config.output.bins if config.output.histograms else None)
    files: dict[str, str] = {}
    for scope, table in tables.items():
        stem = scope.lower()
        files[f"{stem}.{fmt}"] = table.to_csv() if fmt == "csv" else dumps(table.to_json())
        if bins:
            hists = []
            for metric in table.metrics:
                try:
                    hists.append(histogram(table, metric, bins))
                except NoData:
                    if table.rows:
                        _warn(err, f"{scope}.{metric}: no available values, histogram skipped")
            if fmt == "csv":
                files[f"{stem}-histograms.csv"] = "".join(
                    h.to_csv() if i == 0 else h.to_csv().split("\n", 1)[1]
                    for i, h in enumerate(hists)) if hists else "metric,lower,upper,count\n"
            else:
                files[f"{stem}-histograms.json"] = dumps([h.to_json() for h in hists])
    files["configuration.json"] = dumps(config.as_dict())
    _write_outputs(args.out, files)
    for scope, table in tables.items():
        print(f"{scope}: {len(table.rows)} row(s), {len(table.metrics)} metric(s)", file=out)
    if args.out is None:
        for name, text in files.items():
            if name != "configuration.json":
                print(f"== {name}", file=out)
                out.write(text)
    return EXIT_OK


def _read_annotations(path: str | None) -> dict[str, str] | None:
    if path is None:
        return None
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(EXIT_CONFIG, f"{path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise CliError(EXIT_CONFIG, f"{path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise CliError(EXIT_CONFIG, f"{path}: annotations must map names or ids to complexity levels")
    flat: dict[str, str] = {}
    for key, value in data.items():
        if key in ("usecases", "actors") and isinstance(value, dict):
            flat.update({str(k): str(v) for k, v in value.items()})
        else:
            flat[str(key)] = str(value)
    return flat


def cmd_estimate(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    config = _load_config(args, err)
    ucp = config.ucp
    overrides = {}
    if args.rate is not None:
        overrides["hourly_rate"] = args.rate
    if args.hours_per_ucp is not None:
        overrides["hours_per_ucp"] = args.hours_per_ucp
    if overrides:
        from dataclasses import replace
        try:
            ucp = replace(ucp, **overrides)
        except InvalidConfig as exc:
            raise CliError(EXIT_CONFIG, str(exc)) from None
    annotations = _read_annotations(args.annotations)
    model = _load_model(args.model, err)
    try:
        selection = UseCaseFilter(frozenset(_split(args.usecase)) if args.usecase else None,
                                  args.filter)
        result = estimate(model, ucp, selection, annotations)
    except (InvalidFilter, InvalidAnnotation) as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    except NothingToEstimate as exc:
        raise CliError(EXIT_NOTHING, str(exc)) from None
    for w in result.warnings:
        _warn(err, w)

    document = {"result": result.as_dict(), "formula": result.formula_chain(),
                "configuration": ucp.as_dict()}
    if _format(args, config) == "json":
        text = dumps(document)
    else:
        lines = ["Use cases:"]
        lines += [f"  {c.name or c.id:<30} {c.complexity:<8} {c.weight:g}" for c in result.usecases]
        lines.append("Actors:")
        lines += [f"  {c.name or c.id:<30} {c.complexity:<8} {c.weight:g}" for c in result.actors]
        lines.append("Technical factors:")
        lines += [f"  {f.code:<4} {f.name:<40} weight {f.weight:g} rating {f.rating:g}"
                  for f in ucp.technical_factors]
        lines.append("Environment factors:")
        lines += [f"  {f.code:<4} {f.name:<40} weight {f.weight:g} rating {f.rating:g}"
                  for f in ucp.environment_factors]
        lines.append("Estimate:")
        lines += [f"  {line}" for line in result.formula_chain()]
        text = "\n".join(lines) + "\n"
    out.write(text)
    _write_outputs(args.out, {f"estimate.{'json' if _format(args, config) == 'json' else 'txt'}": text})
    return EXIT_OK


def cmd_rules(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    config = _load_config(args, err)
    defs, _ = _load_definitions(args, config)
    ruleset = _ruleset(config, defs)
    model = _load_model(args.model, err)
    try:
        findings = run_rules(model, ruleset)
    except InvalidRuleset as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    except EvaluationError as exc:
        raise CliError(EXIT_CONFIG, f"definitions: {exc}") from None
    fmt = _format(args, config)
    if fmt == "json":
        text = dumps({"findings": [f.as_dict() for f in findings], "ruleset": ruleset.as_dict()})
    else:
        import csv
        import io
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rule", "element", "severity", "message"])
        for f in findings:
            writer.writerow([f.rule_id, f.element, f.severity, f.message])
        text = buf.getvalue()
    out.write(text)
    _write_outputs(args.out, {f"rules.{fmt}": text})
    return EXIT_RULES if has_errors(findings) else EXIT_OK


def _load_tables(path: str, config: Config, registry: MetricRegistry, scopes: list[str] | None,
                 err: TextIO) -> dict[str, MetricTable]:
    suffix = Path(path).suffix.lower()
    if suffix in (".csv", ".json"):
        try:
            with open(path, encoding="utf-8", newline="") as fh:
                if suffix == ".csv":
                    table = MetricTable.read_csv(fh)
                else:
                    table = MetricTable.from_json(json.load(fh))
        except OSError as exc:
            raise CliError(EXIT_PARSE, f"{path}: {exc.strerror}") from None
        except (ValueError, KeyError, ScopeError) as exc:
            raise CliError(EXIT_PARSE, f"{path}: not a metric table ({exc})") from None
        return {table.scope: table}
    model = _load_model(path, err)
    return build_all_tables(model, registry, config.weights, scopes or ["Class"])


def cmd_compare(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    config = _load_config(args, err)
    _, registry = _load_definitions(args, config)
    scopes = _split(args.scope)
    old = _load_tables(args.old, config, registry, scopes, err)
    new = _load_tables(args.new, config, registry, scopes, err)
    common = [s for s in old if s in new]
    if not common:
        raise CliError(EXIT_USAGE, "the two inputs share no table scope")
    try:
        reports = [compare(old[s], new[s]) for s in common]
    except ScopeError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    fmt = _format(args, config)
    if fmt == "json":
        text = dumps({"reports": [r.to_json() for r in reports]})
    else:
        text = "".join(f"== {r.scope}\n" + r.to_csv() for r in reports)
    out.write(text)
    for r in reports:
        for q in r.ambiguous:
            _warn(err, f"{r.scope} {q!r}: qualified name not unique, not compared")
    _write_outputs(args.out, {f"comparison.{fmt}": text})
    return EXIT_OK


def cmd_catalog(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    config = _load_config(args, err)
    defs, registry = _load_definitions(args, config)
    ruleset = _ruleset(config, defs)
    text = dumps(catalog(registry, weights=config.weights, ruleset=ruleset, ucp_config=config.ucp))
    out.write(text)
    _write_outputs(args.out, {"catalog.json": text})
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="umlmetrics",
        description="Design metrics, rule checks and use-case-point estimates for XMI models.",
        epilog=f"The configuration file may also be named by the {ENV_VAR} environment variable. "
               "Exit codes: 0 ok, 1 usage, 2 parse, 3 invalid model, 4 config, "
               "5 rule violations, 6 nothing to estimate.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p: argparse.ArgumentParser, model: bool = True) -> None:
        if model:
            p.add_argument("--model", required=True, help="XMI model file")
        p.add_argument("--config", help=f"YAML configuration file (default: ${ENV_VAR})")
        p.add_argument("--out", help="output directory; created only when the command succeeds")
        p.add_argument("--format", choices=("csv", "json"),
                       help="output format (default from config, else csv)")

    p = sub.add_parser("analyze", help="write metric tables per scope")
    common(p)
    p.add_argument("--scope", action="append",
                   help="scope(s) to tabulate, comma separated or repeated (e.g. Class,Package)")
    p.add_argument("--metrics", action="append", help="restrict to these metrics, comma separated")
    p.add_argument("--definitions", help="custom metric definitions file")
    p.add_argument("--bins", type=int, help="also write histograms with this many bins")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("estimate", help="use case points effort estimate")
    common(p)
    p.add_argument("--annotations", help="YAML mapping of use case/actor names or ids to complexity")
    p.add_argument("--filter", help="regular expression selecting use cases by name")
    p.add_argument("--usecase", action="append", help="use case name or id to include")
    p.add_argument("--rate", type=float, help="override the hourly rate")
    p.add_argument("--hours-per-ucp", type=float, help="override hours per use case point")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("rules", help="run the design rule checker")
    common(p)
    p.add_argument("--definitions", help="custom metric and rule definitions file")
    p.set_defaults(func=cmd_rules)

    p = sub.add_parser("compare", help="compare two model revisions or exported tables")
    p.add_argument("old", help="old model (XMI) or exported table (.csv/.json)")
    p.add_argument("new", help="new model (XMI) or exported table (.csv/.json)")
    common(p, model=False)
    p.add_argument("--scope", action="append", help="scope(s) to compare (default Class)")
    p.add_argument("--definitions", help="custom metric definitions file")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("catalog", help="emit metric and rule definitions with references")
    common(p, model=False)
    p.add_argument("--definitions", help="custom metric definitions file")
    p.set_defaults(func=cmd_catalog)
    return parser


def main(argv: Sequence[str] | None = None, out: TextIO | None = None,
         err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if getattr(args, "bins", None) is not None and args.bins < 1:
        print("error: --bins must be at least 1", file=err)
        return EXIT_USAGE
    try:
        return args.func(args, out, err)
    except CliError as exc:
        print(f"error: {exc}", file=err)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
