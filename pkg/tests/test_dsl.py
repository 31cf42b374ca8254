from pathlib import Path

import pytest
from lxml import etree

from conftest import FIXTURE_NAMES, build, by_name
from fixture_models import FIXTURE_DIR
from umlmetrics import (CyclicDefinition, DslParseError, ElementKind, EvaluationError,
                        UnresolvedMetric, Unavailable)
from umlmetrics.dsl import (RELATIONS, Count, Predicate, evaluate_definition, load_definitions,
                            parse_definitions, register_definitions, rule_violations)
from umlmetrics.registry import MODEL_ROW_ID, SCOPES, MetricContext, builtin_registry
from xmi_builder import XmiBuilder

K = ElementKind
SHIPPED = FIXTURE_DIR / "definitions.xml"

PUBLIC_OPS = b"""<definitions>
  <metric name="public_ops" target="Class">
    <count relation="ownedOperation"><where attribute="visibility" equals="public"/></count>
  </metric>
</definitions>"""


def defs_of(body: str) -> bytes:
    return f"<definitions>{body}</definitions>".encode()


def test_count_definition_parses():
    (d,) = parse_definitions(PUBLIC_OPS)
    assert d.name == "public_ops" and d.target_kind == "Class"
    assert d.expression == Count("ownedOperation", (Predicate("equals", "visibility", "public"),))
    assert d.render() == "public_ops := count(ownedOperation, visibility = public)"


def test_self_reference_is_cyclic():
    doc = defs_of('<metric name="loop" target="Class"><add><metric-ref name="loop"/>'
                  '<literal value="1"/></add></metric>')
    with pytest.raises(CyclicDefinition):
        parse_definitions(doc)


def test_mutual_reference_is_cyclic():
    doc = defs_of('<metric name="a" target="Class"><metric-ref name="b"/></metric>'
                  '<metric name="b" target="Class"><metric-ref name="a"/></metric>')
    with pytest.raises(CyclicDefinition, match="a -> b -> a|b -> a -> b"):
        parse_definitions(doc)


def test_sum_over_forward_reference_resolves():
    doc = defs_of('<metric name="pkg_load" target="Package">'
                  '<sum metric="public_ops" over="ownedClass"/></metric>'
                  '<metric name="public_ops" target="Class"><count relation="ownedOperation">'
                  '<where attribute="visibility" equals="public"/></count></metric>')
    names = [d.name for d in parse_definitions(doc)]
    assert names == ["pkg_load", "public_ops"]


def test_unknown_reference():
    with pytest.raises(UnresolvedMetric) as info:
        parse_definitions(defs_of('\n<metric name="x" target="Class">\n<metric-ref name="nope"/></metric>'))
    assert info.value.line == 3


def test_syntax_error_location():
    with pytest.raises(DslParseError) as info:
        parse_definitions(b"<definitions>\n<metric name='x' target='Class'>\n</definitions>")
    assert info.value.line == 3
    assert ":3:" in str(info.value)


@pytest.mark.parametrize("body, fragment", [
    ('<metric target="Class"><literal value="1"/></metric>', "'name'"),
    ('<metric name="x" target="Gadget"><literal value="1"/></metric>', "target kind"),
    ('<metric name="x" target="Class"><count relation="friends"/></metric>', "unknown relation"),
    ('<metric name="x" target="Class"><literal value="one"/></metric>', "not a number"),
    ('<metric name="x" target="Class"><sub><literal value="1"/></sub></metric>', "two operands"),
    ('<metric name="x" target="Class"><script/></metric>', "unknown expression"),
    ('<metric name="NOC" target="Class"><literal value="1"/></metric>', "shadows"),
    ('<metric name="x" target="Class"><literal value="1"/></metric>'
     '<metric name="x" target="Class"><literal value="2"/></metric>', "defined twice"),
    ('<rule name="R" target="Class" severity="fatal"><literal value="1"/></rule>', "severity"),
])
def test_invalid_documents(body, fragment):
    with pytest.raises(DslParseError, match=fragment):
        parse_definitions(defs_of(body))


def test_public_ops_value(models):
    m = models["hierarchy"]
    (d,) = parse_definitions(PUBLIC_OPS)
    column = evaluate_definition(m, d)
    # Router has route and ping public; Door has toggle
    assert column[by_name(m, "Router")] == 2
    b = XmiBuilder()
    c = b.clazz("Mixed")
    b.operation(c, "a")
    b.operation(c, "b")
    b.operation(c, "c", visibility="private")
    bm, _ = build(b)
    assert evaluate_definition(bm, d) == {c: 2}


def test_count_on_empty_model():
    (d,) = parse_definitions(PUBLIC_OPS)
    m, _ = build(XmiBuilder())
    assert evaluate_definition(m, d) == {}


def test_relation_not_applicable_names_element(models):
    m = models["hierarchy"]
    (d,) = parse_definitions(defs_of('<metric name="x" target="Package">'
                                     '<count relation="ownedAttribute"/></metric>'))
    with pytest.raises(EvaluationError, match="shapes"):
        evaluate_definition(m, d)


def test_unavailable_propagates(models):
    m = models["packages"]
    (d,) = parse_definitions(defs_of('<metric name="x" target="Class">'
                                     '<add><metric-ref name="RFC"/><literal value="1"/></add></metric>'))
    assert set(evaluate_definition(m, d).values()) == {Unavailable}


def test_division_by_zero_is_unavailable(models):
    m = models["mwk_like"]
    defs = load_definitions(SHIPPED)
    ops = next(d for d in defs if d.name == "ops_per_class")
    column = evaluate_definition(m, ops, definitions=defs)
    assert column[by_name(m, "requirements")] is Unavailable
    assert column[by_name(m, "ui")] == 2.0


SHIPPED_PAIRS = [("dsl_NumAttr", "NumAttr"), ("dsl_NOC", "NOC"), ("dsl_NP", "NP"),
                 ("dsl_States", "States")]


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_reimplementations_agree_with_builtins(models, name):
    m = models[name]
    defs = {d.name: d for d in load_definitions(SHIPPED)}
    registry = builtin_registry()
    ctx = MetricContext(m)
    for dsl_name, builtin in SHIPPED_PAIRS:
        column = evaluate_definition(m, defs[dsl_name])
        spec = registry[builtin]
        assert column == {el: spec.compute(ctx, el) for el in column}, dsl_name


def test_model_scope_row(models):
    defs = {d.name: d for d in load_definitions(SHIPPED)}
    assert evaluate_definition(models["hierarchy"], defs["dsl_NP"]) == {MODEL_ROW_ID: 3}


def test_evaluation_is_pure(models):
    m = models["hierarchy"]
    defs = load_definitions(SHIPPED)
    first = [evaluate_definition(m, d, definitions=defs) for d in defs]
    second = [evaluate_definition(m, d, definitions=defs) for d in defs]
    assert first == second


def test_register_definitions_extends_a_copy():
    base = builtin_registry()
    defs = load_definitions(SHIPPED)
    extended = register_definitions(base, defs)
    assert "pkg_load" in extended and "pkg_load" not in base
    assert "WIDE-INTERFACE" not in extended
    assert not extended["pkg_load"].builtin


def test_rule_violations(models):
    m = models["hierarchy"]
    defs = load_definitions(SHIPPED)
    deep = next(d for d in defs if d.name == "DEEP-HIERARCHY")
    hits = dict(rule_violations(m, deep, definitions=defs))
    assert set(hits) == {by_name(m, "D")}
    assert "deep inheritance" in hits[by_name(m, "D")]


def test_rules_cannot_be_referenced():
    doc = defs_of('<rule name="R" target="Class"><literal value="1"/></rule>'
                  '<metric name="x" target="Class"><metric-ref name="R"/></metric>')
    with pytest.raises(UnresolvedMetric, match="rules cannot be referenced"):
        parse_definitions(doc)


def test_external_entities_not_resolved(tmp_path):
    secret = tmp_path / "secret.txt"
    secret.write_text("42")
    doc = (f'<!DOCTYPE d [<!ENTITY x SYSTEM "file://{secret}">]>'
           '<definitions><metric name="m" target="Class" description="&x;">'
           '<literal value="1"/></metric></definitions>').encode()
    try:
        defs = parse_definitions(doc)
    except DslParseError:
        return
    assert "42" not in defs[0].description


# -- schema ----------------------------------------------------------------------

SCHEMA_PATH = Path(__file__).resolve().parents[1] / "docs" / "definitions.xsd"
XS = "{http://www.w3.org/2001/XMLSchema}"


def test_shipped_definitions_validate_against_schema():
    schema = etree.XMLSchema(etree.parse(str(SCHEMA_PATH)))
    schema.assertValid(etree.parse(str(SHIPPED)))
    bad = etree.fromstring(b'<definitions><metric name="x" target="Class">'
                           b'<count relation="friends"/></metric></definitions>')
    assert not schema.validate(bad)


def test_schema_enumerations_follow_the_code():
    doc = etree.parse(str(SCHEMA_PATH))

    def enum(name):
        node = doc.find(f"{XS}simpleType[@name='{name}']")
        return {e.get("value") for e in node.iter(f"{XS}enumeration")}

    assert enum("Relation") == set(RELATIONS)
    assert enum("Target") == set(SCOPES)
