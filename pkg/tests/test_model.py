import pytest

from conftest import diagram_from, random_diagrams
from idvoi.errors import DuplicateVariable, InvalidDiagram, UnknownVariable
from idvoi.model import InfluenceDiagram, Variable, no_forgetting_closure, require_valid, validate_diagram


def test_umbrella_is_admissible(umbrella):
    report = validate_diagram(umbrella)
    assert report.ok
    assert report.findings == ()


def test_descendant_observation_rejected(fig3):
    bad = InfluenceDiagram(fig3.variables, fig3.observations + (("j", "D1"),))
    report = validate_diagram(bad)
    assert "descendant_observation" in report.codes()
    with pytest.raises(InvalidDiagram):
        require_valid(bad)


def test_cpt_not_normalized():
    d = diagram_from("chance A { states: a, b ; cpt: 0.5 0.4 }")
    assert validate_diagram(d).codes() == ["cpt_not_normalized"]


@pytest.mark.parametrize(
    "text, code",
    [
        ("chance A { states: a, b ; cpt: 1.2 -0.2 }", "cpt_negative"),
        ("chance A { states: a ; cpt: 1 }\nvalue U { parents: A ; table: 1 }\nchance B { states: b ; parents: U ; cpt: 1 }",
         "value_has_children"),
        ("chance A { states: a, a ; cpt: 0.5 0.5 }", "duplicate_state"),
        ("chance A { states: a ; parents: B ; cpt: 1 }\nchance B { states: b ; parents: A ; cpt: 1 }", "cycle"),
        ("chance A { states: a ; cpt: 1 }\ndecision D { states: x }\nvalue U { parents: D ; table: 0 }\nobserve U before D",
         "observe_value_node"),
        ("decision D { states: x }\ndecision E { states: y }\nvalue U { parents: D, E ; table: 0 }\nobserve E before D",
         "conflicting_observation"),
    ],
)
def test_invariant_violations(text, code):
    assert code in validate_diagram(diagram_from(text)).codes()


def test_findings_follow_declaration_order():
    d = InfluenceDiagram((
        Variable("A", "chance", ("a", "b"), (), (0.5, 0.4)),
        Variable("B", "chance", ("a", "b"), (), (-1.0, 2.0)),
    ))
    assert [f.variables[0] for f in validate_diagram(d).errors] == ["A", "B"]


def test_duplicate_variable_rejected():
    v = Variable("A", "chance", ("a",), (), (1.0,))
    with pytest.raises(DuplicateVariable):
        InfluenceDiagram((v, v))


def test_fig1_information_sets(fig1):
    i1, i2, i3 = (fig1.observed_before(d) for d in ("D1", "D2", "D3"))
    assert i1 == frozenset()
    assert i2 == {"C", "D1"}
    assert i3 == {"C", "D1", "D2", "E", "A"}


def test_umbrella_unobserved_information(umbrella):
    assert umbrella.observed_before("Take") == frozenset()
    assert umbrella.info_slot["Weather"] == 1


def test_closure_implies_later_decisions():
    d = diagram_from(
        "chance X { states: a, b ; cpt: 0.5 0.5 }\n"
        "decision D1 { states: x }\ndecision D2 { states: x }\ndecision D3 { states: x }\n"
        "value U { parents: X, D1, D2, D3 ; table: 1 2 }\n"
        "observe X before D2"
    )
    assert "X" not in d.observed_before("D1")
    assert "X" in d.observed_before("D2")
    assert "X" in d.observed_before("D3")
    assert "D1" in d.observed_before("D3") and "D2" in d.observed_before("D3")


def test_closure_idempotent_and_monotone():
    for _, d in random_diagrams(40):
        slot, sets = no_forgetting_closure(d)
        again = InfluenceDiagram(
            d.variables,
            tuple((x, d.decisions[s]) for x, s in slot.items() if s < len(d.decisions)),
        )
        assert no_forgetting_closure(again) == (slot, sets)
        for a, b in zip(sets, sets[1:]):
            assert a <= b


def test_descendants(fig3):
    assert "j" in fig3.descendants("D1")
    assert fig3.descendants("v1") == frozenset()
    chain = diagram_from(
        "chance X { states: a ; cpt: 1 }\nchance Y { states: a ; parents: X ; cpt: 1 }\n"
        "chance Z { states: a ; parents: Y ; cpt: 1 }"
    )
    assert chain.descendants("X") == {"Y", "Z"}
    with pytest.raises(UnknownVariable):
        chain.descendants("Q")


def test_with_slot_moves_one_variable(fig1):
    moved = fig1.with_slot("C", 2)
    assert moved.info_slot["C"] == 2
    assert moved.info_slot["E"] == fig1.info_slot["E"]
    never = fig1.with_slot("C", 3)
    assert never.info_slot["C"] == 3
