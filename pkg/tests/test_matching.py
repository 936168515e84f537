"""Matching mechanisms: greedy, group partition, randomized group mechanism."""

import random
from fractions import Fraction

from bruteforce import naive_opt, powerset

from packmech.fixtures import lowerbound_matching
from packmech.generators import gen_matching
from packmech.instance import validate_instance
from packmech.matching import (
    matching_greedy_unit,
    matching_mul_alg,
    max_weight_matching,
    partition_groups,
)
from packmech.tape import enumerate_branches


def edges_doc(edges, agents, demand="mul"):
    items = [
        {"id": eid, "value": str(v), "u": u, "v": w} for eid, u, w, v in edges
    ]
    return validate_instance(
        {
            "kind": "matching",
            "demand": demand,
            "items": items,
            "agents": agents,
            "constraint": {},
        }
    )


def test_greedy_unit_picks_crossing_pair():
    inst = lowerbound_matching()
    out = matching_greedy_unit(inst, inst.truthful_bids())
    assert out.selections == (frozenset({"t1u1"}), frozenset({"t2u2"}))
    assert out.total_value == Fraction(21, 10)


def test_single_edge_selected():
    inst = edges_doc([("e0", "x", "y", 4)], [["e0"]], demand="unit")
    out = matching_greedy_unit(inst, inst.truthful_bids())
    assert out.selections[0] == frozenset({"e0"})


def test_greedy_unit_three_approx_on_random_graphs():
    from itertools import product

    for i in range(120):
        rng = random.Random(f"match:{i}")
        inst = gen_matching(rng, "unit", max_edges=7)
        got = matching_greedy_unit(inst, inst.truthful_bids()).total_value
        # One-edge-per-agent matching optimum, naively.
        best = Fraction(0)
        menus = [list(held) + [None] for held in inst.agents]
        for combo in product(*menus):
            chosen = [c for c in combo if c is not None]
            seen = []
            for c in chosen:
                it = inst.item_by_id[c]
                seen.extend([it.u, it.v])
            if len(seen) == len(set(seen)):
                value = sum((inst.item_by_id[c].value for c in chosen), Fraction(0))
                best = max(best, value)
        assert 3 * got >= best, inst.name


def test_max_weight_matching_against_bruteforce():
    for i in range(80):
        rng = random.Random(f"mwm:{i}")
        inst = gen_matching(rng, "mul", max_edges=7)
        value, chosen = max_weight_matching(list(inst.items))
        seen = []
        for c in chosen:
            it = inst.item_by_id[c]
            seen.extend([it.u, it.v])
        assert len(seen) == len(set(seen))
        best = Fraction(0)
        for subset in powerset([it.id for it in inst.items]):
            endpoints = []
            for c in subset:
                it = inst.item_by_id[c]
                endpoints.extend([it.u, it.v])
            if len(endpoints) == len(set(endpoints)):
                best = max(
                    best, sum((inst.item_by_id[c].value for c in subset), Fraction(0))
                )
        assert value == best, inst.name


def test_parallel_edges_conflict():
    # Two items over the same endpoints: only one can ever be matched.
    inst = edges_doc(
        [("e0", "x", "y", 5), ("e1", "x", "y", 4)], [["e0"], ["e1"]], demand="unit"
    )
    out = matching_greedy_unit(inst, inst.truthful_bids())
    assert out.selections == (frozenset({"e0"}), frozenset())
    value, chosen = max_weight_matching(list(inst.items))
    assert value == 5 and chosen == ("e0",)


# --- group partition -------------------------------------------------------


def eight_edge_instance(values):
    edges = []
    for idx, v in enumerate(values):
        edges.append((f"e{idx:02d}", f"x{idx}", f"y{idx}", v))
    return edges_doc(edges, [[e[0] for e in edges]])


def test_partition_exponent_and_groups_for_vmax_8():
    inst = eight_edge_instance([8, 7, 6, 5, 4, 3, 2, 1])
    partition = partition_groups(inst, inst.truthful_bids())
    assert partition.exponent == 3  # 4 < 8 <= 8
    assert partition.group_count == 3  # ceil(log2(8))
    assert partition.groups == (
        (Fraction(4), Fraction(8)),
        (Fraction(2), Fraction(4)),
        (Fraction(1, 2), Fraction(2)),  # lowest group reaches the discard floor
    )
    assert partition.discarded == frozenset()
    # Groups tile (2^(E-g-1), 2^E] with no gaps.
    assert partition.groups[0][1] == Fraction(2) ** partition.exponent
    for (lo, _), (_, hi_next) in zip(partition.groups, partition.groups[1:]):
        assert lo == hi_next


def test_partition_exponent_for_vmax_5():
    inst = eight_edge_instance([5, 1, 1, 1, 1, 1, 1, 1])
    partition = partition_groups(inst, inst.truthful_bids())
    assert partition.exponent == 3  # 4 < 5 <= 8


def test_partition_small_value_lands_in_lowest_group_or_discard():
    inst = eight_edge_instance([8, 3, Fraction(9, 10), Fraction(1, 2), 8, 8, 8, 8])
    partition = partition_groups(inst, inst.truthful_bids())
    # 9/10 sits in (1/2, 1]; exactly 1/2 is at the discard boundary.
    lowest = partition.members[-1]
    assert "e02" in lowest
    assert "e03" in partition.discarded
    dropped = sum((inst.item_by_id[e].value for e in partition.discarded), Fraction(0))
    assert dropped <= partition.v_max


def test_partition_priority_agent_is_first_max_claimer():
    edges = [("e0", "a", "b", 3), ("e1", "c", "d", 8), ("e2", "e", "f", 8)]
    inst = edges_doc(edges, [["e0"], ["e1"], ["e2"]])
    partition = partition_groups(inst, inst.truthful_bids())
    assert partition.priority_agent == 1


def test_partition_all_zero_values_degenerates():
    inst = edges_doc([("e0", "a", "b", 0)], [["e0"]])
    partition = partition_groups(inst, inst.truthful_bids())
    assert partition.v_max == 0
    assert partition.discarded == frozenset({"e0"})


# --- randomized group mechanism --------------------------------------------


def test_single_edge_always_selected():
    inst = edges_doc([("e0", "x", "y", 4)], [["e0"]])
    branches = enumerate_branches(
        lambda tape: matching_mul_alg(inst, inst.truthful_bids(), tape)
    )
    assert all(b.result.selections[0] == frozenset({"e0"}) for b in branches)
    assert sum(b.probability for b in branches) == 1


def test_expected_utility_averages_over_groups():
    # Four disjoint edges, one agent; m=4 gives two groups: (4,8] holds the
    # 8, (1,4] holds 3 and 2, and the 1 falls below the discard floor.
    inst = edges_doc(
        [("e0", "a", "b", 8), ("e1", "c", "d", 3), ("e2", "f", "g", 2), ("e3", "h", "i", 1)],
        [["e0", "e1", "e2", "e3"]],
    )
    branches = enumerate_branches(
        lambda tape: matching_mul_alg(inst, inst.truthful_bids(), tape)
    )
    assert len(branches) == 2
    per_group = sorted(b.result.utilities[0] for b in branches)
    assert per_group == [Fraction(5), Fraction(8)]
    expected = sum((b.probability * b.result.utilities[0] for b in branches), Fraction(0))
    assert expected == Fraction(8 + 5, 2)


def test_all_zero_values_empty_outcome_without_draws():
    inst = edges_doc([("e0", "a", "b", 0)], [["e0"]])
    branches = enumerate_branches(
        lambda tape: matching_mul_alg(inst, inst.truthful_bids(), tape)
    )
    assert len(branches) == 1
    assert branches[0].result.total_value == 0


def test_group_mechanism_log_ratio_recorded():
    """Exact expected value stays within c*log2(m) of the optimum with a
    generous c; the true claim is asymptotic, this pins desk-scale sanity."""
    worst = Fraction(0)
    for i in range(60):
        rng = random.Random(f"mulalg:{i}")
        inst = gen_matching(rng, "mul", max_edges=8)
        branches = enumerate_branches(
            lambda tape: matching_mul_alg(inst, inst.truthful_bids(), tape)
        )
        expected = sum(
            (b.probability * b.result.total_value for b in branches), Fraction(0)
        )
        opt = naive_opt(inst)
        if opt == 0:
            continue
        assert expected > 0, inst.name
        m = max(len(inst.items), 2)
        log2m = max(1, (m - 1).bit_length())
        worst = max(worst, opt / (expected * log2m))
    assert worst <= 4, f"observed constant {float(worst):.3f}"
