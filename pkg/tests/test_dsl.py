import pytest
from hypothesis import given, settings, strategies as st

from conftest import CORPUS, FIXTURES, GOLDEN, load
from fmtool.dsl import (ErrorKind, ParseFailure, export_alloy, export_dot, parse, serialize,
                        tokenize)
from fmtool.generate import random_model
from fmtool.model import RelationType, build_model, mandatory, optional


def errors_of(text):
    with pytest.raises(ParseFailure) as info:
        parse(text)
    return info.value.errors


def test_parse_cad(cad):
    assert cad.name == "CAD_partial"
    assert cad.root == "v"
    assert len(cad.features) == 14
    assert len(cad.constraints) == 2
    assert [str(c) for c in cad.constraints] == ["v2.3.1 requires v1.1", "v2.4 requires v3.2"]
    assert [r.rtype for r in cad.relations[:3]] == \
        [RelationType.MANDATORY, RelationType.MANDATORY, RelationType.OPTIONAL]


def test_empty_feature_block_is_syntax_error():
    [err] = errors_of("model M features { r { } }")
    assert err.kind is ErrorKind.SYNTACTIC
    assert (err.span.line, err.span.column) == (1, 20)


def test_undeclared_constraint_feature():
    [err] = errors_of("model M\nfeatures { r { mandatory { v1 } } }\n"
                      "constraints {\n  ghost requires v1\n}\n")
    assert err.kind is ErrorKind.SEMANTIC
    assert "ghost" in err.message
    assert (err.span.line, err.span.column, err.span.length) == (4, 3, 5)


def test_multiple_errors_in_one_pass():
    text = ("model M\n"
            "features {\n"
            "  r { mandatory { a @ b } }\n"
            "  q { bogus { z } }\n"
            "  s { or { } }\n"
            "}\n"
            "constraints {\n"
            "  a needs b\n"
            "  a requires\n"
            "}\n")
    errs = errors_of(text)
    assert [(e.kind, e.span.line) for e in errs] == [
        (ErrorKind.LEXICAL, 3), (ErrorKind.SYNTACTIC, 4), (ErrorKind.SYNTACTIC, 5),
        (ErrorKind.SYNTACTIC, 8), (ErrorKind.SYNTACTIC, 10)]


@pytest.mark.parametrize("text, fragment", [
    ("model M features { r { mandatory { a } } x { optional { y } } }", "without parent"),
    ("model M features { r { mandatory { r } } }", "own child"),
    ("model M features { r { mandatory { a } } r { optional { b } } }", "more than one block"),
    ("model M features { r { mandatory { a } optional { a } } }", "already has parent"),
    ("model M features { r { or { a } } }", "at least two"),
    ("model M features { }", "no explicit root"),
    ("model M root a features { r { mandatory { a } } }", "declared root"),
    ("model M features { r { mandatory { a } } } constraints { a requires r }", "ancestor"),
])
def test_semantic_errors(text, fragment):
    errs = errors_of(text)
    assert any(fragment in e.message for e in errs), errs
    assert all(e.kind is ErrorKind.SEMANTIC for e in errs)


def test_keywords_are_contextual():
    m = parse("model model features { features { mandatory { or requires } } }\n"
              "constraints { or excludes requires }")
    assert m.features == ("features", "or", "requires")
    assert parse(serialize(m)) == m


def test_comments_and_whitespace():
    m = parse("# header\nmodel M # name\nfeatures{r{optional{a}}}#x\n")
    assert m.features == ("r", "a")


def test_mandatory_block_expands_per_child(cad):
    assert [r.children for r in cad.relations[:2]] == [("v1",), ("v2",)]


def test_serialize_golden(cad):
    assert serialize(cad) == (GOLDEN / "cad.canonical.fm").read_text()


def test_serialize_root_only():
    m = build_model("Single", [], root="r")
    text = serialize(m)
    assert text == (GOLDEN / "single.canonical.fm").read_text()
    assert text == "model Single\nroot r\nfeatures { }\n"
    assert parse(text) == m


@pytest.mark.parametrize("name", CORPUS)
def test_round_trip_corpus(name):
    m = load(name)
    text = serialize(m)
    assert parse(text) == m
    assert serialize(parse(text)) == text


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_round_trip_generated(seed):
    m = random_model(seed)
    assert parse(serialize(m)) == m


def test_interleaved_runs_keep_order():
    m = build_model("M", [mandatory("r", "a"), optional("r", "b"), mandatory("r", "c")])
    assert "    mandatory { a }\n    optional { b }\n    mandatory { c }\n" in serialize(m)
    assert parse(serialize(m)) == m


# every error span must lie inside the text
_alphabet = st.sampled_from(list("model features constraints requires excludes "
                                 "mandatory optional or alternative {}{} a b c.1 @#\n"))


@settings(max_examples=300, deadline=None)
@given(st.text(_alphabet, max_size=120))
def test_error_spans_inside_text(text):
    try:
        parse(text)
    except ParseFailure as exc:
        lines = text.split("\n")
        assert exc.errors
        for e in exc.errors:
            assert e.message
            if not text.strip():
                continue
            assert 1 <= e.span.line <= len(lines)
            row = lines[e.span.line - 1]
            assert 1 <= e.span.column <= len(row)
            assert e.span.column + e.span.length - 1 <= len(row)


def test_tokenize_spans():
    errs = []
    toks = tokenize("model M\n  v2.3.1 {", errs)
    assert [(t.text, t.span.line, t.span.column, t.span.length) for t in toks[:-1]] == [
        ("model", 1, 1, 5), ("M", 1, 7, 1), ("v2.3.1", 2, 3, 6), ("{", 2, 10, 1)]
    assert not errs


def test_export_dot(cad):
    dot = export_dot(cad)
    assert dot == (GOLDEN / "cad.dot").read_text()
    node_lines = [l for l in dot.splitlines() if l.strip().endswith('";')]
    edges = [l for l in dot.splitlines() if "->" in l]
    assert len(node_lines) == 14
    assert len([e for e in edges if "dashed" not in e]) == 13
    assert len([e for e in edges if "dashed" in e]) == 2
    assert '"v" -> "v1" [arrowhead=dot];' in dot
    assert '"v" -> "v3" [arrowhead=odot];' in dot
    assert export_dot(cad) == dot


def test_export_dot_single():
    dot = export_dot(load("single"))
    assert "->" not in dot
    assert dot.count('  "r";') == 1


def test_export_alloy(cad):
    als = export_alloy(cad)
    assert als == (GOLDEN / "cad.als").read_text()
    lines = [l.strip() for l in als.splitlines()]
    for expected in ["c1.type = Mandatory", "c1.parent = v", "c1.child = v1",
                     "c3.type = Optional", "c3.parent = v", "c3.child = v3",
                     "c5.type = OrFeature", "CAD_partial.root = v"]:
        assert expected in lines
    assert "sig FM {" in lines


def test_export_alloy_without_constraints():
    als = export_alloy(load("single"))
    assert "Dependency" not in als
    assert "relation = none" in als


def test_export_alloy_name_mangling():
    m = build_model("sig", [mandatory("r", "Mandatory"), optional("r", "c1"),
                            optional("r", "a.b"), optional("r", "a_b")])
    als = export_alloy(m)
    assert "one sig r, Mandatory_, c1_, a_b, a_b_ extends Name {}" in als
    assert "one sig sig_ extends FM {}" in als
