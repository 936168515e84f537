"""Knapsack mechanisms: fractional greedy, sampling, stop-scan semantics."""

import random
from fractions import Fraction

from bruteforce import fractional_breakpoints

from packmech.generators import gen_knapsack
from packmech.instance import Item, validate_instance
from packmech.knapsack import (
    fractional_opt,
    greedy_fill,
    ks_mul_large_agent,
    ks_mul_mechanism,
    ks_mul_sample,
    ks_unit_mechanism,
    ks_unit_sample,
)
from packmech.tape import Draw, FixedTape, enumerate_branches

try:
    from hypothesis import given, settings
    from hypothesis import strategies as st

    HAVE_HYPOTHESIS = True
except ImportError:  # pragma: no cover
    HAVE_HYPOTHESIS = False


def item(iid, v, c):
    return Item(iid, Fraction(v), Fraction(c))


def test_fractional_opt_takes_fraction_of_second_item():
    sol = fractional_opt([item("i1", 6, 2), item("i2", 3, 3)], Fraction(4))
    assert sol.full == ("i1",)
    assert sol.fractional == ("i2", Fraction(2, 3))
    assert sol.value == 8
    assert sol.capacity_used == 4
    assert sol.value == fractional_breakpoints(
        [item("i1", 6, 2), item("i2", 3, 3)], Fraction(4)
    )


def test_fractional_opt_everything_fits():
    sol = fractional_opt([item("i1", 6, 2), item("i2", 3, 3)], Fraction(9))
    assert sol.full == ("i1", "i2")
    assert sol.fractional is None
    assert sol.value == 9


def test_fractional_opt_half_of_single_item():
    sol = fractional_opt([item("i1", 7, 4)], Fraction(2))
    assert sol.full == ()
    assert sol.fractional == ("i1", Fraction(1, 2))
    assert sol.value == Fraction(7, 2)


def test_fractional_opt_zero_budget():
    sol = fractional_opt([item("i1", 7, 4)], Fraction(0))
    assert sol.full == () and sol.fractional is None and sol.value == 0


if HAVE_HYPOTHESIS:

    @given(
        st.lists(
            st.tuples(st.integers(0, 9), st.integers(1, 9)), min_size=1, max_size=6
        ),
        st.integers(0, 20),
    )
    @settings(max_examples=120, deadline=None)
    def test_fractional_opt_is_lp_optimum(entries, budget):
        items = [item(f"i{idx}", v, c) for idx, (v, c) in enumerate(entries)]
        sol = fractional_opt(items, Fraction(budget))
        assert sol.value == fractional_breakpoints(items, Fraction(budget))
        assert sol.capacity_used <= budget


def sample_instance():
    """Four agents; agent 0's big item exceeds C/lambda and is deleted."""
    return validate_instance(
        {
            "kind": "knapsack",
            "demand": "unit",
            "items": [
                {"id": "i01", "value": "8", "capacity": "6"},
                {"id": "i02", "value": "4", "capacity": "4"},
                {"id": "i11", "value": "6", "capacity": "3"},
                {"id": "i21", "value": "5", "capacity": "5"},
                {"id": "i22", "value": "1", "capacity": "1"},
                {"id": "i31", "value": "3", "capacity": "2"},
            ],
            "agents": [["i01", "i02"], ["i11"], ["i21", "i22"], ["i31"]],
            "constraint": {"capacity": "10"},
        },
        name="ks-fixed",
    )


def sample_tape(bits, alpha=None):
    draws = [
        Draw("bit", ("sample", idx), Fraction(1, 2), flag) for idx, flag in enumerate(bits)
    ]
    if alpha is not None:
        label, p, value = alpha
        draws.append(Draw("bit", ("alpha", label), p, value))
    return FixedTape(draws)


def test_ks_unit_sample_follows_hand_trace():
    # T = {0, 1}: greedy packs i11 then i02, V = 10, threshold 1/2.
    # Agent 2 takes its best passing item i21, agent 3 takes i31.
    inst = sample_instance()
    out = ks_unit_sample(inst, inst.truthful_bids(), 2, sample_tape([True, True, False, False]))
    assert out.selections == (frozenset(), frozenset(), frozenset({"i21"}), frozenset({"i31"}))
    assert out.utilities == (0, 0, 5, 3)


def test_ks_unit_sample_everyone_sampled_wins_nothing():
    inst = sample_instance()
    out = ks_unit_sample(inst, inst.truthful_bids(), 2, sample_tape([True] * 4))
    assert out.total_value == 0


def test_ks_unit_sample_empty_sample_has_vacuous_threshold():
    # V = 0: every kept item passes; agents served greedily by value.
    inst = sample_instance()
    out = ks_unit_sample(inst, inst.truthful_bids(), 2, sample_tape([False] * 4))
    # Canonical order: agent0 takes i02 (4), agent1 i11 (3 fits), agent2's
    # items no longer fit except i22, agent3's i31 fits.
    assert out.selections[0] == frozenset({"i02"})
    assert out.selections[1] == frozenset({"i11"})
    assert out.selections[2] == frozenset({"i22"})
    assert out.selections[3] == frozenset({"i31"})


def test_ks_unit_mechanism_best_item_branch():
    inst = validate_instance(
        {
            "kind": "knapsack",
            "demand": "unit",
            "items": [
                {"id": "a", "value": "5", "capacity": "2"},
                {"id": "b", "value": "3", "capacity": "1"},
            ],
            "agents": [["a"], ["b"]],
            "constraint": {"capacity": "4"},
        }
    )
    tape = FixedTape([Draw("bit", ("mech",), Fraction(1, 2), False)])
    out = ks_unit_mechanism(inst, inst.truthful_bids(), 2, tape)
    assert out.selections[0] == frozenset({"a"})
    assert out.total_value == 5


def test_ks_unit_mechanism_expectation_splits_halves():
    inst = sample_instance()
    branches = enumerate_branches(
        lambda tape: ks_unit_mechanism(inst, inst.truthful_bids(), 2, tape)
    )
    assert sum(b.probability for b in branches) == 1
    expected = sum((b.probability * b.result.total_value for b in branches), Fraction(0))
    sample_branches = enumerate_branches(
        lambda tape: ks_unit_sample(inst, inst.truthful_bids(), 2, tape)
    )
    sample_expected = sum(
        (b.probability * b.result.total_value for b in sample_branches), Fraction(0)
    )
    # Best feasible single item is i01 (value 8, capacity 6 <= 10).
    assert expected == Fraction(1, 2) * 8 + Fraction(1, 2) * sample_expected


def large_agent_instance():
    return validate_instance(
        {
            "kind": "knapsack",
            "demand": "mul",
            "items": [
                {"id": "a1", "value": "4", "capacity": "4"},
                {"id": "a2", "value": "2", "capacity": "6"},
                {"id": "b1", "value": "3", "capacity": "4"},
            ],
            "agents": [["a1", "a2"], ["b1"]],
            "constraint": {"capacity": "12"},
        },
        name="ks-large-agent",
    )


def test_ks_mul_large_agent_pays_fractional_value_in_expectation():
    inst = large_agent_instance()
    branches = enumerate_branches(
        lambda tape: ks_mul_large_agent(inst, inst.truthful_bids(), tape)
    )
    # Winner is agent 0 with fractional value 4 + (1/3)*2 = 14/3.
    assert len(branches) == 2
    expected = sum((b.probability * b.result.utilities[0] for b in branches), Fraction(0))
    assert expected == Fraction(14, 3)
    assert all(b.result.utilities[1] == 0 for b in branches)


def test_ks_mul_large_agent_integral_solution_is_deterministic():
    inst = validate_instance(
        {
            "kind": "knapsack",
            "demand": "mul",
            "items": [
                {"id": "a1", "value": "4", "capacity": "3"},
                {"id": "b1", "value": "1", "capacity": "3"},
            ],
            "agents": [["a1"], ["b1"]],
            "constraint": {"capacity": "6"},
        }
    )
    branches = enumerate_branches(
        lambda tape: ks_mul_large_agent(inst, inst.truthful_bids(), tape)
    )
    assert len(branches) == 1
    assert branches[0].result.selections[0] == frozenset({"a1"})


def stop_scan_instance():
    return validate_instance(
        {
            "kind": "knapsack",
            "demand": "mul",
            "items": [
                {"id": "t1", "value": "4", "capacity": "4"},
                {"id": "r1", "value": "6", "capacity": "4"},
                {"id": "r2", "value": "3", "capacity": "3"},
                {"id": "r3", "value": "2", "capacity": "2"},
            ],
            "agents": [["t1"], ["r1", "r2"], ["r3"]],
            "constraint": {"capacity": "12"},
        },
        name="ks-stop",
    )


def test_ks_mul_sample_fractional_item_stops_scan():
    # lambda=3: reduced budget 8. Agent 1 packs r1+r2 fully (7). Agent 2's
    # r3 only fits fractionally (share 1/2), so the scan stops there.
    inst = stop_scan_instance()
    include = ks_mul_sample(
        inst,
        inst.truthful_bids(),
        3,
        sample_tape([True, False, False], alpha=("r3", Fraction(1, 2), True)),
    )
    assert include.selections[1] == frozenset({"r1", "r2"})
    assert include.selections[2] == frozenset({"r3"})
    load = sum(inst.item_by_id[i].capacity for i in include.selected)
    assert Fraction(8) < load <= Fraction(12)  # beyond reduced, within true

    exclude = ks_mul_sample(
        inst,
        inst.truthful_bids(),
        3,
        sample_tape([True, False, False], alpha=("r3", Fraction(1, 2), False)),
    )
    assert exclude.selections[2] == frozenset()
    assert sum(inst.item_by_id[i].capacity for i in exclude.selected) <= Fraction(8)


def test_ks_mul_sample_all_sampled_empty():
    inst = stop_scan_instance()
    out = ks_mul_sample(inst, inst.truthful_bids(), 3, sample_tape([True] * 3))
    assert out.total_value == 0


def test_ks_mul_mechanism_single_item_branch():
    inst = stop_scan_instance()
    tape = FixedTape([Draw("choice", ("mech",), 3, 0)])
    out = ks_mul_mechanism(inst, inst.truthful_bids(), 3, tape)
    assert out.selections[1] == frozenset({"r1"})  # value 6 is the max


def test_capacity_safety_on_every_branch():
    for i in range(50):
        rng = random.Random(f"ks-safety:{i}")
        inst = gen_knapsack(rng, "mul", max_items=6, max_agents=3)
        budget = inst.constraint.capacity
        for lam in (2, 3):
            branches = enumerate_branches(
                lambda tape: ks_mul_mechanism(inst, inst.truthful_bids(), lam, tape)
            )
            assert sum(b.probability for b in branches) == 1
            for b in branches:
                load = sum(
                    (inst.item_by_id[j].capacity for j in b.result.selected), Fraction(0)
                )
                assert load <= budget


def test_greedy_fill_takes_everything_that_fits():
    value, chosen = greedy_fill(
        [item("a", 6, 2), item("b", 3, 3), item("c", 1, 8)], Fraction(5)
    )
    assert chosen == frozenset({"a", "b"})
    assert value == 9
