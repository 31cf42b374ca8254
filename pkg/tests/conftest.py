import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from fixture_models import FIXTURES, fixture_path  # noqa: E402
from oracles import Raw  # noqa: E402
from umlmetrics import parse_file, parse_xmi  # noqa: E402

FIXTURE_NAMES = sorted(FIXTURES)


@pytest.fixture(scope="session")
def models():
    return {name: parse_file(fixture_path(name)) for name in FIXTURE_NAMES}


@pytest.fixture(scope="session")
def raws():
    return {name: Raw(FIXTURES[name]().records) for name in FIXTURE_NAMES}


def build(builder):
    """Parse a builder's document; returns (model, raw records)."""
    return parse_xmi(builder.to_bytes()), Raw(builder.records)


def by_name(model, name, kind=None):
    hits = [el for el in model.elements.values()
            if el.name == name and (kind is None or el.kind.value == kind)]
    assert len(hits) == 1, f"{name!r}: {len(hits)} matches"
    return hits[0].id


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        verdict, title = results[number]
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title}")
