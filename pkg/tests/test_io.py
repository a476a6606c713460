import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES
from idvoi.generate import random_diagram
from idvoi.io import ParseError, export_dot, format_diagram, parse, serialize_result
from idvoi.propagate import compile_diagram, solve, sweep
from idvoi.treebuild import moral_graph
from idvoi.voi import advance_observation


def test_umbrella_parses(umbrella):
    assert umbrella.names == ("Weather", "Take", "U")
    assert umbrella["U"].table == (20, 20, 100, 0)
    assert umbrella["Weather"].kind == "chance"
    assert solve(umbrella)[0].meu == 60


def test_single_certain_variable():
    d = parse("chance A { states: a1 ; parents: ; cpt: 1.0 }")
    assert d["A"].states == ("a1",) and d["A"].parents == () and d["A"].table == (1.0,)


def test_arity_mismatch_has_span():
    text = "chance A { states: a, b ; cpt: 0.5 0.5 }\nchance B { states: x, y ; parents: A ; cpt: 0.1 0.9 1 }"
    with pytest.raises(ParseError) as err:
        parse(text)
    (diag,) = err.value.diagnostics
    assert diag.code == "arity_mismatch"
    assert (diag.span.line, diag.span.column) == (2, 45)  # first table entry


def test_parse_collects_independent_errors():
    text = (
        "chance A { states: a, b ; cpt: 0.5 0.5 }\n"
        "chance { states: a }\n"
        "chance A { states: a ; cpt: 1 }\n"
        "value U { parents: Q ; table: 1 }\n"
    )
    with pytest.raises(ParseError) as err:
        parse(text)
    codes = [d.code for d in err.value.diagnostics]
    assert codes == ["syntax_error", "duplicate_variable", "unknown_variable"]
    assert [d.span.line for d in err.value.diagnostics] == [2, 3, 4]


def test_comments_and_exponents():
    d = parse("# header\nchance A { states: a, b ; cpt: 2.5e-1 7.5E-1 }  # trailing\n")
    assert d["A"].table == (0.25, 0.75)


@pytest.mark.parametrize("name", ["umbrella.id", "umbrella_observed.id", "fig1.id", "fig3.id"])
def test_fixture_round_trip(name):
    d = parse((FIXTURES / name).read_text())
    assert parse(format_diagram(d)) == d


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_round_trip_random(seed):
    d = random_diagram(seed)
    text = format_diagram(d)
    assert parse(text) == d
    assert format_diagram(parse(text)) == text


def test_diagram_dot_shapes(umbrella):
    dot = export_dot(umbrella)
    assert "Weather [shape=ellipse]" in dot
    assert "Take [shape=box]" in dot
    assert "U [shape=diamond]" in dot
    assert dot == export_dot(umbrella)


def test_moral_dot_styles(fig1):
    dot = export_dot(moral_graph(fig1), fig1)
    assert "C -- D2 [penwidth=3]" in dot
    assert "A -- D3 [penwidth=3]" in dot
    assert "style=dashed" in dot


def test_tree_dot_single_root(fig3):
    ctx = compile_diagram(fig3)
    dot = export_dot(ctx.tree)
    sources = {line.split("->")[0].strip() for line in dot.splitlines() if "->" in line}
    nodes = {line.split()[0] for line in dot.splitlines() if "[shape=" in line}
    assert len(nodes - sources) == 1
    assert dot == export_dot(compile_diagram(fig3).tree)


def test_solve_json(umbrella):
    out = json.loads(serialize_result(solve(umbrella)[0], umbrella))
    assert list(out) == ["meu", "prob_evidence", "policies"]
    assert out["meu"] == 60.0 and out["prob_evidence"] == 1.0
    assert out["policies"] == {"Take": {"": "leave"}}


def test_shortcut_json(fig1):
    ctx = compile_diagram(fig1)
    sweep(ctx)
    out = json.loads(serialize_result(advance_observation(ctx, "B", "D3"), fig1))
    assert list(out)[:3] == ["meu", "prob_evidence", "policies"]
    assert list(out)[3:] == [
        "query", "value_with_change", "baseline", "delta", "shortcut", "fallback",
        "clusters_recomputed", "per_case_count",
    ]
    assert out["shortcut"] is True and out["delta"] == 0.0
