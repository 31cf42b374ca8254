"""Exception hierarchy shared by every module of the tool."""

from __future__ import annotations


class UmlMetricsError(Exception):
    """Base class for all errors raised by umlmetrics."""


class NotFound(UmlMetricsError, KeyError):
    def __init__(self, element_id: str):
        super().__init__(element_id)
        self.element_id = element_id

    def __str__(self) -> str:
        return f"no element with id {self.element_id!r}"


class WrongElementKind(UmlMetricsError, TypeError):
    def __init__(self, element_id: str, actual: str, expected: str):
        super().__init__(element_id, actual, expected)
        self.element_id = element_id
        self.actual = actual
        self.expected = expected

    def __str__(self) -> str:
        return f"element {self.element_id!r} is a {self.actual}, expected {self.expected}"


class InvalidModel(UmlMetricsError):
    """The model violates a structural invariant (cycles, bad references)."""


class ParseError(UmlMetricsError):
    """Malformed XML. ``line``/``column`` are 1-based when known."""

    def __init__(self, message: str, source: str = "<bytes>", line: int | None = None,
                 column: int | None = None):
        super().__init__(message)
        self.message = message
        self.source = source
        self.line = line
        self.column = column

    def __str__(self) -> str:
        where = self.source
        if self.line is not None:
            where += f":{self.line}"
            if self.column is not None:
                where += f":{self.column}"
        return f"{where}: {self.message}"


class NotXmi(UmlMetricsError):
    """Well-formed XML that carries no XMI root or namespace."""


class ScopeError(UmlMetricsError):
    pass


class NoData(UmlMetricsError):
    pass


class InvalidConfig(UmlMetricsError):
    pass


class InvalidAnnotation(UmlMetricsError):
    pass


class InvalidFilter(UmlMetricsError):
    pass


class NothingToEstimate(UmlMetricsError):
    pass


class InvalidRuleset(UmlMetricsError):
    pass


class DslParseError(UmlMetricsError):
    def __init__(self, message: str, source: str = "<definitions>", line: int | None = None):
        super().__init__(message)
        self.message = message
        self.source = source
        self.line = line

    def __str__(self) -> str:
        if self.line is None:
            return f"{self.source}: {self.message}"
        return f"{self.source}:{self.line}: {self.message}"


class UnresolvedMetric(DslParseError):
    pass


class CyclicDefinition(DslParseError):
    pass


class EvaluationError(UmlMetricsError):
    pass
