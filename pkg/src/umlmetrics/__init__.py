"""Design metrics for UML models exchanged as XMI."""

__version__ = "0.1.0"

from .errors import (CyclicDefinition, DslParseError, EvaluationError, InvalidAnnotation,  # noqa: E402
                     InvalidConfig, InvalidFilter, InvalidModel, InvalidRuleset, NoData, NotFound,
                     NothingToEstimate, NotXmi, ParseError, ScopeError, UmlMetricsError,
                     UnresolvedMetric, WrongElementKind)
from .model import ElementKind, ModelElement, UmlModel, Unavailable  # noqa: E402
from .xmi import parse_file, parse_xmi  # noqa: E402

__all__ = [
    "CyclicDefinition", "DslParseError", "ElementKind", "EvaluationError", "InvalidAnnotation",
    "InvalidConfig", "InvalidFilter", "InvalidModel", "InvalidRuleset", "ModelElement", "NoData",
    "NotFound", "NotXmi", "NothingToEstimate", "ParseError", "ScopeError", "UmlMetricsError",
    "UmlModel", "Unavailable", "UnresolvedMetric", "WrongElementKind", "__version__",
    "parse_file", "parse_xmi",
]
