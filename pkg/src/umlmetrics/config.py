"""The single YAML configuration document.

Sections (all optional)::

    weights:      responsibility_weights, dependency_weights, uc4_coefficients
    ucp:          actor_weights, usecase_weights, technical_ratings,
                  environment_ratings, default_rating, hours_per_ucp,
                  hourly_rate, currency
    rules:        enabled, disabled, naming, god_class_threshold, severities
    definitions:  path to a metric definitions file (relative to this file)
    output:       format (csv | json), bins, histograms

``UMLMETRICS_CONFIG`` names a config file used when none is given explicitly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import InvalidConfig, InvalidRuleset
from .structural import WeightConfig
from .ucp import UcpConfig

ENV_VAR = "UMLMETRICS_CONFIG"
FORMATS = ("csv", "json")
SECTIONS = ("weights", "ucp", "rules", "definitions", "output")


@dataclass(frozen=True)
class OutputOptions:
    format: str = "csv"
    bins: int = 10
    histograms: bool = False

    def __post_init__(self) -> None:
        if self.format not in FORMATS:
            raise InvalidConfig(f"output format must be one of {FORMATS}, got {self.format!r}")
        if self.bins < 1:
            raise InvalidConfig("output bins must be at least 1")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any] | None) -> OutputOptions:
        data = dict(data or {})
        unknown = set(data) - {"format", "bins", "histograms"}
        if unknown:
            raise InvalidConfig(f"unknown output keys: {sorted(unknown)}")
        try:
            return cls(str(data.get("format", "csv")), int(data.get("bins", 10)),
                       bool(data.get("histograms", False)))
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(f"bad output section: {exc}") from None

    def as_dict(self) -> dict[str, Any]:
        return {"format": self.format, "bins": self.bins, "histograms": self.histograms}


@dataclass(frozen=True)
class Config:
    weights: WeightConfig = field(default_factory=WeightConfig)
    ucp: UcpConfig = field(default_factory=UcpConfig)
    rules: Mapping[str, Any] = field(default_factory=dict)
    definitions: Path | None = None
    output: OutputOptions = field(default_factory=OutputOptions)
    source: str | None = None

    def as_dict(self) -> dict[str, Any]:
        return {
            "source": self.source,
            "weights": self.weights.as_dict(),
            "ucp": self.ucp.as_dict(),
            "rules": dict(self.rules),
            "definitions": str(self.definitions) if self.definitions else None,
            "output": self.output.as_dict(),
        }


def config_from_mapping(data: Mapping[str, Any] | None, base_dir: Path | None = None,
                        source: str | None = None) -> Config:
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise InvalidConfig(f"{source or 'config'}: top level must be a mapping")
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise InvalidConfig(f"{source or 'config'}: unknown sections {sorted(unknown)}")
    for name in ("weights", "ucp", "rules", "output"):
        if data.get(name) is not None and not isinstance(data[name], Mapping):
            raise InvalidConfig(f"{source or 'config'}: section {name!r} must be a mapping")
    rules = dict(data.get("rules") or {})
    try:
        # validate eagerly; definitions are attached later by the caller
        from .rules import Ruleset
        Ruleset.from_mapping(rules)
    except InvalidRuleset as exc:
        raise InvalidConfig(f"{source or 'config'}: {exc}") from None
    definitions = data.get("definitions")
    if definitions is not None:
        definitions = Path(str(definitions))
        if base_dir is not None and not definitions.is_absolute():
            definitions = base_dir / definitions
    try:
        return Config(
            weights=WeightConfig.from_mapping(data.get("weights")),
            ucp=UcpConfig.from_mapping(data.get("ucp")),
            rules=rules,
            definitions=definitions,
            output=OutputOptions.from_mapping(data.get("output")),
            source=source,
        )
    except InvalidConfig as exc:
        if source is None:
            raise
        raise InvalidConfig(f"{source}: {exc}") from None


def load_config(path: str | os.PathLike | None = None,
                environ: Mapping[str, str] | None = None) -> Config:
    """Load ``path``, else the file named by ``UMLMETRICS_CONFIG``, else defaults."""
    environ = os.environ if environ is None else environ
    if path is None:
        path = environ.get(ENV_VAR) or None
    if path is None:
        return Config()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidConfig(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f":{mark.line + 1}:{mark.column + 1}" if mark is not None else ""
        raise InvalidConfig(f"{path}{where}: {getattr(exc, 'problem', None) or exc}") from None
    return config_from_mapping(data, path.parent, str(path))
