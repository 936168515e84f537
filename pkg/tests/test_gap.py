"""Assignment-market mechanisms: size splits, sampled thresholds, the mix."""

import random
from fractions import Fraction

import pytest
from bruteforce import naive_gap_opt

from packmech.errors import InstanceError
from packmech.fixtures import c2_gap
from packmech.gap import (
    Gap3Config,
    gap_main,
    gap_mech_1,
    gap_mech_2,
    gap_mech_3,
    gap_special_mix,
    reference_astar,
)
from packmech.generators import gen_gap
from packmech.instance import outcome_to_doc
from packmech.registry import Params, bind
from packmech.stable import make_market, market_from_instance
from packmech.tape import Draw, FixedTape, enumerate_branches


def job_tape(bits):
    return FixedTape(
        [Draw("bit", ("sample", idx), Fraction(1, 2), flag) for idx, flag in enumerate(bits)]
    )


def test_config_validation():
    Gap3Config()  # defaults (3, 1/6) are fine
    with pytest.raises(InstanceError, match="lambda"):
        Gap3Config(lam=2)
    with pytest.raises(InstanceError, match="mu"):
        Gap3Config(lam=3, mu=Fraction(1, 3))  # 1/3 * 3/2 = 1/2 >= 1/3


def test_mech_1_drops_small_pairs():
    market = make_market([("k", 9)], [("a", "k", 5, 1), ("b", "k", 4, 2)])
    out = gap_mech_1(market, market.truthful_bids(), 3)  # both below 9/3
    assert out.machine_of == {}


def test_mech_1_keeps_best_large_pair():
    market = make_market([("k", 9)], [("a", "k", 5, 4), ("b", "k", 7, 5)])
    out = gap_mech_1(market, market.truthful_bids(), 3)
    assert out.machine_of == {"b": "k"}


def test_mech_2_drops_large_pairs():
    market = make_market([("k", 9)], [("a", "k", 5, 4), ("b", "k", 7, 9)])
    out = gap_mech_2(market, market.truthful_bids(), 3)
    assert out.machine_of == {}


def test_mech_2_quota_keeps_top_lambda_values():
    market = make_market(
        [("k", 12)],
        [("a", "k", 9, 1), ("b", "k", 8, 1), ("c", "k", 7, 1), ("d", "k", 6, 1)],
    )
    out = gap_mech_2(market, market.truthful_bids(), 3)
    assert set(out.machine_of) == {"a", "b", "c"}


def test_mech_3_all_sampled_assigns_nothing_but_keeps_test_assignment():
    market = make_market(
        [("k", 9)], [("a", "k", 5, 2), ("b", "k", 4, 2)]
    )
    final, trace = gap_mech_3(market, market.truthful_bids(), Gap3Config(), job_tape([True, True]))
    assert final.machine_of == {}
    assert trace.sample == frozenset({"a", "b"})
    assert trace.test_assignment.machine_of == {"a": "k", "b": "k"}
    # Thresholds follow mu * value / capacity with (lambda, mu) = (3, 1/6).
    assert trace.thresholds["k"] == Fraction(1, 6) * Fraction(9) / Fraction(9)


def test_mech_3_empty_sample_is_value_greedy_under_capacity():
    market = make_market(
        [("k", 9)], [("a", "k", 5, 3), ("b", "k", 4, 3), ("c", "k", 3, 3), ("d", "k", 9, 3)]
    )
    final, trace = gap_mech_3(
        market, market.truthful_bids(), Gap3Config(), job_tape([False] * 4)
    )
    assert trace.thresholds["k"] == 0
    # Canonical job order a, b, c, d; capacity holds three small pairs.
    assert final.machine_of == {"a": "k", "b": "k", "c": "k"}


def test_mech_3_threshold_filters_low_density_pairs():
    market = make_market(
        [("k", 6)],
        [("t", "k", 6, 2), ("lo", "k", Fraction(1, 4), 2), ("hi", "k", 4, 2)],
    )
    # Sample {t}: threshold (1/6) * 6/6 = 1/6. Job lo has density 1/8 and is
    # filtered out; hi passes and is assigned.
    final, trace = gap_mech_3(
        market, market.truthful_bids(), Gap3Config(), job_tape([True, False, False])
    )
    assert trace.thresholds["k"] == Fraction(1, 6)
    assert final.machine_of == {"hi": "k"}
    # Without a sampled job the threshold is vacuous and lo gets a seat.
    final2, trace2 = gap_mech_3(
        market, market.truthful_bids(), Gap3Config(), job_tape([False, False, False])
    )
    assert trace2.thresholds["k"] == 0
    assert final2.machine_of == {"t": "k", "lo": "k", "hi": "k"}


def test_special_mix_single_pair_on_both_branches():
    market = make_market([("k", 5)], [("j", "k", 3, 2)])
    branches = enumerate_branches(
        lambda tape: gap_special_mix(market, market.truthful_bids(), tape)
    )
    assert len(branches) == 2
    assert all(b.result.machine_of == {"j": "k"} for b in branches)


def test_special_mix_four_approx_inequality_on_invariant_markets():
    for family in ("job-value", "job-capacity", "machine-value", "machine-capacity"):
        for i in range(40):
            rng = random.Random(f"mix:{family}:{i}")
            inst = gen_gap(rng, max_jobs=5, max_machines=3, invariance=family)
            market = market_from_instance(inst)
            bids = market.truthful_bids()
            branches = enumerate_branches(lambda tape: gap_special_mix(market, bids, tape))
            value = {b.transcript[0].value: b.result.total_value for b in branches}
            opt = naive_gap_opt(inst)
            assert 2 * value[False] + 2 * value[True] >= opt, inst.name


def test_gap_main_single_pair_expectation():
    market = make_market([("k", 9)], [("j", "k", 6, 3)])
    branches = enumerate_branches(
        lambda tape: gap_main(market, market.truthful_bids(), Gap3Config(), tape)
    )
    expected = sum((b.probability * b.result.total_value for b in branches), Fraction(0))
    # Pair capacity 3 = C/lambda sits in both splits: mech-1 and mech-2 both
    # assign it (value 6); mech-3 assigns only when the job lands outside the
    # sample (value 3 in expectation). Total: (6 + 6 + 3)/3.
    assert expected == Fraction(6 + 6 + 3, 3)


def test_gap_main_on_c2_all_branches_feasible():
    inst = c2_gap()
    runner = bind("gap-main", Params())
    branches = enumerate_branches(
        lambda tape: runner(inst, inst.truthful_bids(), tape)
    )
    assert sum(b.probability for b in branches) == 1
    for b in branches:
        doc = outcome_to_doc(inst, b.result)  # make_outcome already validated
        assert set(doc) >= {"selections", "utilities", "total_value", "assignment"}


def test_reference_astar_empty_market():
    market = make_market([("k", 5)], [])
    assert reference_astar(market, {}, 3).machine_of == {}


def test_reference_astar_matches_full_sample_run():
    for i in range(30):
        rng = random.Random(f"astar-eq:{i}")
        inst = gen_gap(rng, max_jobs=5, pair_mode="small")
        market = market_from_instance(inst)
        bids = market.truthful_bids()
        _, trace = gap_mech_3(
            market, bids, Gap3Config(), job_tape([True] * len(market.jobs))
        )
        astar = reference_astar(market, bids, 3)
        assert trace.test_assignment.machine_of == astar.machine_of
