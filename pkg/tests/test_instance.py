"""Instance validation, feasibility, and valuation."""

from fractions import Fraction

import pytest

from packmech.errors import InstanceError, MechanismError
from packmech.fixtures import lowerbound_matching
from packmech.instance import (
    evaluate,
    instance_to_doc,
    is_feasible,
    make_outcome,
    validate_instance,
)
from packmech.rationals import parse_rational


def knapsack_doc(**overrides):
    doc = {
        "kind": "knapsack",
        "demand": "unit",
        "items": [
            {"id": "a1", "value": "3", "capacity": "3"},
            {"id": "a2", "value": "2", "capacity": "3"},
        ],
        "agents": [["a1"], ["a2"]],
        "constraint": {"capacity": "5"},
    }
    doc.update(overrides)
    return doc


def test_accepts_disjoint_knapsack():
    inst = validate_instance(knapsack_doc())
    assert inst.kind == "knapsack"
    assert inst.agents == (("a1",), ("a2",))


def test_overlapping_agents_rejected():
    with pytest.raises(InstanceError, match="disjoint"):
        validate_instance(knapsack_doc(agents=[["a1"], ["a1"]]))


def test_negative_value_rejected():
    doc = knapsack_doc()
    doc["items"][0]["value"] = "-1"
    with pytest.raises(InstanceError, match="negative value"):
        validate_instance(doc)


def test_missing_capacity_rejected():
    doc = knapsack_doc()
    del doc["items"][0]["capacity"]
    with pytest.raises(InstanceError, match="capacity"):
        validate_instance(doc)


def test_gap_agent_with_two_jobs_rejected():
    doc = {
        "kind": "gap",
        "demand": "unit",
        "items": [
            {"id": "p1", "value": "1", "capacity": "1", "job": "j1", "machine": "m"},
            {"id": "p2", "value": "1", "capacity": "1", "job": "j2", "machine": "m"},
        ],
        "agents": [["p1", "p2"]],
        "constraint": {"machines": [{"id": "m", "capacity": "2"}]},
    }
    with pytest.raises(InstanceError, match="two different jobs"):
        validate_instance(doc)


def test_malformed_rational_rejected():
    with pytest.raises(InstanceError, match="malformed rational"):
        validate_instance(knapsack_doc(constraint={"capacity": "five"}))
    with pytest.raises(InstanceError, match="malformed rational"):
        parse_rational(2.5)


def test_rational_forms():
    assert parse_rational("3") == 3
    assert parse_rational("1/10") == Fraction(1, 10)
    assert parse_rational("2.5") == Fraction(5, 2)
    assert parse_rational(7) == 7


def test_canonicalization_sorts_items_by_id():
    doc = knapsack_doc()
    doc["items"].reverse()
    inst = validate_instance(doc)
    assert [it.id for it in inst.items] == ["a1", "a2"]


def test_roundtrip_through_doc():
    inst = validate_instance(knapsack_doc(), name="roundtrip")
    again = validate_instance(instance_to_doc(inst), name="roundtrip")
    assert again == inst


def test_empty_selection_feasible_everywhere():
    assert is_feasible(validate_instance(knapsack_doc()), set())
    assert is_feasible(lowerbound_matching(), set())


def test_knapsack_overflow_infeasible():
    inst = validate_instance(knapsack_doc())
    assert not is_feasible(inst, {"a1", "a2"})  # 3 + 3 > 5
    assert is_feasible(inst, {"a1"})


def test_matching_shared_endpoint_infeasible():
    inst = lowerbound_matching()
    assert not is_feasible(inst, {"t1u1", "t2u1"})  # both touch u1
    assert is_feasible(inst, {"t1u1", "t2u2"})


def test_unknown_item_errors():
    inst = validate_instance(knapsack_doc())
    with pytest.raises(InstanceError, match="unknown item"):
        is_feasible(inst, {"zz"})


def test_evaluate_empty_and_single():
    inst = validate_instance(knapsack_doc())
    total, utilities = evaluate(inst, [set(), set()])
    assert total == 0 and utilities == (0, 0)
    total, utilities = evaluate(inst, [{"a1"}, set()])
    assert total == 3 and utilities == (3, 0)


def test_evaluate_crossing_pair_matches_optimum():
    inst = lowerbound_matching()  # epsilon = 1/10
    total, utilities = evaluate(inst, [{"t1u1"}, {"t2u2"}])
    assert total == Fraction(21, 10)
    assert utilities == (Fraction(11, 10), Fraction(1))


def test_evaluate_rejects_infeasible():
    inst = validate_instance(knapsack_doc())
    with pytest.raises(InstanceError, match="infeasible"):
        evaluate(inst, [{"a1"}, {"a2"}])


def test_unit_demand_limits_one_item_per_agent():
    doc = knapsack_doc(agents=[["a1", "a2"], []], constraint={"capacity": "10"})
    inst = validate_instance(doc)
    assert not is_feasible(inst, {"a1", "a2"})


def test_make_outcome_enforces_reports():
    inst = validate_instance(knapsack_doc())
    bids = (frozenset(), frozenset({"a2"}))
    with pytest.raises(MechanismError, match="exceeds its report"):
        make_outcome(inst, bids, [{"a1"}, set()])


def test_reports_must_be_subsets_of_holdings():
    from packmech.instance import check_bids

    inst = validate_instance(knapsack_doc())
    with pytest.raises(InstanceError, match="does not hold"):
        check_bids(inst, (frozenset({"a2"}), frozenset()))


def test_unsupported_format_rejected():
    with pytest.raises(InstanceError, match="format"):
        validate_instance(knapsack_doc(format=2))


def explicit_doc(independent):
    return {
        "kind": "matroid",
        "demand": "mul",
        "items": [{"id": "a", "value": "2"}, {"id": "b", "value": "3"}],
        "agents": [["a", "b"]],
        "constraint": {"matroid": "explicit", "independent": independent},
    }


def test_explicit_matroid_family_accepted():
    inst = validate_instance(explicit_doc([[], ["a"], ["b"]]))
    assert is_feasible(inst, {"a"})
    assert not is_feasible(inst, {"a", "b"})


def test_explicit_matroid_requires_empty_set():
    with pytest.raises(InstanceError, match="empty set"):
        validate_instance(explicit_doc([["a"], ["b"]]))


def test_explicit_matroid_requires_downward_closure():
    with pytest.raises(InstanceError, match="downward-closed"):
        validate_instance(explicit_doc([[], ["a", "b"]]))
