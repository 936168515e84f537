"""Named property suites: ratio bounds, truthfulness audits, stability,
threshold and sampling inequalities, and the fixture regressions.

Each suite runs ``trials`` seeded random instances and returns a TrialResult;
the acceptance tests call these at full scale and the CLI ``paper-check``
command at desk scale. All comparisons are exact rational arithmetic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .audit import audit_truthfulness, check_sampling_lemma, verify_witness
from .fixtures import builtin_fixtures
from .gap import Gap3Config, gap_mech_2, gap_mech_3, reference_astar, tilde_astar_values
from .generators import (
    GENERATORS,
    gen_gap,
    gen_knapsack,
    gen_lemma_values,
    gen_matching,
    gen_matroid,
)
from .instance import Instance, evaluate
from .matching import partition_groups
from .matroid import matroid_greedy_mul
from .oracle import exact_opt
from .registry import Params, bind
from .stable import (
    find_blocking_pair,
    market_from_instance,
    sm_da_alg,
    virtual_capacities,
)
from .tape import SeededTape, enumerate_branches


@dataclass(frozen=True)
class TrialResult:
    ok: bool
    detail: str


def trial_rng(seed: int, index: int) -> random.Random:
    return random.Random(f"{seed}:{index}")


def expected_total(runner, instance: Instance) -> tuple[Fraction, int]:
    """Exact expected total value over the mechanism's branch tree."""
    branches = enumerate_branches(
        lambda tape: runner(instance, instance.truthful_bids(), tape)
    )
    value = sum(
        (b.probability * b.result.total_value for b in branches), Fraction(0)
    )
    return value, len(branches)


def matroid_optimality_suite(trials: int, seed: int, max_items: int = 12) -> TrialResult:
    """Greedy multi-unit matroid value equals the exhaustive optimum."""
    for i in range(trials):
        rng = trial_rng(seed, i)
        inst = gen_matroid(rng, "mul", max_items=max_items, name=f"matroid-opt-{i}")
        got = matroid_greedy_mul(inst, inst.truthful_bids()).total_value
        opt, _ = exact_opt(inst)
        if got != opt:
            return TrialResult(False, f"{inst.name}: greedy {got} != optimum {opt}")
    return TrialResult(True, f"{trials} instances, greedy always optimal")


def ratio_bound_suite(
    mechanism: str,
    generator: str,
    bound: Fraction,
    trials: int,
    seed: int,
    params: Params = Params(),
) -> TrialResult:
    """Worst exact optimum/expected-value ratio stays within the bound."""
    runner = bind(mechanism, params)
    gen = GENERATORS[generator]
    worst = Fraction(0)
    for i in range(trials):
        rng = trial_rng(seed, i)
        inst = gen(rng, name=f"{generator}-{i}")
        opt, _ = exact_opt(inst)
        if opt == 0:
            continue
        value, _ = expected_total(runner, inst)
        if value == 0:
            return TrialResult(False, f"{inst.name}: optimum {opt} but mechanism value 0")
        ratio = opt / value
        worst = max(worst, ratio)
        if ratio > bound:
            return TrialResult(
                False, f"{inst.name}: ratio {ratio} (~{float(ratio):.3f}) exceeds {bound}"
            )
    return TrialResult(
        True, f"{trials} instances, worst ratio {worst} (~{float(worst):.3f}) <= {bound}"
    )


def _audit_generator(mechanism: str) -> Callable[[random.Random, str], Instance]:
    """Small instances sized so full tape/misreport enumeration stays quick."""
    from .registry import get_mechanism

    spec = get_mechanism(mechanism)
    demand = spec.demands[0]

    def gen(rng: random.Random, name: str) -> Instance:
        if spec.kind == "matroid":
            return gen_matroid(rng, demand, max_items=8, max_agents=4, name=name)
        if spec.kind == "matching":
            return gen_matching(rng, demand, max_edges=8, max_agents=4, name=name)
        if spec.kind == "knapsack":
            while True:
                inst = gen_knapsack(rng, demand, max_items=7, max_agents=4, name=name)
                if max((len(a) for a in inst.agents), default=0) <= 3:
                    return inst
        return gen_gap(
            rng, max_jobs=4, max_machines=3, max_pairs_per_job=2, name=name
        )

    return gen


def truthfulness_suite(
    mechanism: str, mode: str, trials: int, seed: int, params: Params = Params()
) -> TrialResult:
    """Exhaustive misreport audits on random instances; zero violations pass."""
    runner = bind(mechanism, params)
    gen = _audit_generator(mechanism)
    deviations = 0
    for i in range(trials):
        rng = trial_rng(seed, i)
        inst = gen(rng, f"{mechanism}-audit-{i}")
        report = audit_truthfulness(runner, inst, mode, mechanism_name=mechanism)
        deviations += report.deviations_checked
        if not report.truthful:
            w = report.witness
            assert w is not None
            return TrialResult(
                False,
                f"{inst.name}: agent {w.agent} gains "
                f"{w.utility_truth} -> {w.utility_misreport} via {sorted(w.misreport)}",
            )
    return TrialResult(True, f"{trials} instances, {deviations} deviations, none profitable")


def stability_suite(trials: int, seed: int, lam: int = 3) -> TrialResult:
    """Deferred acceptance with virtual capacities yields no blocking pair
    on markets whose pairs all fit within C_k/lambda."""
    from .gap import _filter_small

    for i in range(trials):
        rng = trial_rng(seed, i)
        inst = gen_gap(rng, max_jobs=6, pair_mode="small", name=f"stable-{i}")
        market = market_from_instance(inst)
        bids = _filter_small(market, market.truthful_bids(), lam)
        caps = virtual_capacities(market, lam)
        assignment = sm_da_alg(market, bids, virtual_caps=caps)
        blocking = find_blocking_pair(market, bids, assignment, virtual_caps=caps)
        if blocking is not None:
            return TrialResult(
                False,
                f"{inst.name}: blocking pair ({blocking.job}, {blocking.machine})",
            )
    return TrialResult(True, f"{trials} markets, all outputs stable")


def not_big_improve_suite(trials: int, seed: int, lam: int = 3) -> TrialResult:
    """Sampled-group deferred acceptance vs the full run, shared sample draw:
    test jobs never do worse, machines never exceed lam/(lam-1) of the full
    run's per-machine value."""
    cfg = Gap3Config(lam=lam)
    factor = Fraction(lam, lam - 1)
    for i in range(trials):
        rng = trial_rng(seed, i)
        inst = gen_gap(rng, max_jobs=6, pair_mode="small", name=f"nbi-{i}")
        market = market_from_instance(inst)
        bids = market.truthful_bids()
        _, trace = gap_mech_3(market, bids, cfg, SeededTape(seed * 1000003 + i))
        astar = reference_astar(market, bids, lam)
        for job in trace.sample:
            if trace.test_assignment.value_of(job) < astar.value_of(job):
                return TrialResult(
                    False,
                    f"{inst.name}: job {job} test value "
                    f"{trace.test_assignment.value_of(job)} < full value {astar.value_of(job)}",
                )
        for k in market.machines:
            if trace.test_assignment.machine_value[k] > factor * astar.machine_value[k]:
                return TrialResult(
                    False,
                    f"{inst.name}: machine {k} test value "
                    f"{trace.test_assignment.machine_value[k]} exceeds "
                    f"{factor} * {astar.machine_value[k]}",
                )
    return TrialResult(True, f"{trials} shared-sample comparisons hold")


def threshold_lemma_suite(trials: int, seed: int) -> TrialResult:
    """Within any optimal knapsack set, items at density >= v(OPT)/(2C)
    carry at least half of v(OPT)."""
    for i in range(trials):
        rng = trial_rng(seed, i)
        demand = rng.choice(("unit", "mul"))
        inst = gen_knapsack(rng, demand, max_items=9, name=f"thresh-{i}")
        assert inst.constraint is not None
        budget = inst.constraint.capacity  # type: ignore[union-attr]
        opt, witness = exact_opt(inst)
        if opt == 0:
            continue
        cutoff = opt / (2 * budget)
        passing = sum(
            (
                inst.item_by_id[j].value
                for j in witness
                if inst.item_by_id[j].ratio >= cutoff
            ),
            Fraction(0),
        )
        if passing < opt / 2:
            return TrialResult(
                False, f"{inst.name}: high-density value {passing} < {opt}/2"
            )
    return TrialResult(True, f"{trials} instances, threshold inequality holds")


def sampling_lemma_suite(trials: int, seed: int) -> TrialResult:
    """Generated inputs meeting the precondition always reach P >= 3/4."""
    for i in range(trials):
        rng = trial_rng(seed, i)
        values = gen_lemma_values(rng)
        probability, ok = check_sampling_lemma(values, Fraction(1, 36))
        if not ok:
            return TrialResult(
                False, f"trial {i}: probability {probability} (~{float(probability):.4f}) < 3/4"
            )
    return TrialResult(True, f"{trials} inputs, probability always >= 3/4")


def mech2_vs_tilde_suite(trials: int, seed: int, lam: int = 3) -> TrialResult:
    """Quota-lam greedy recovers at least half of the full deferred-acceptance
    assignment restricted to each machine's top-lam value jobs."""
    for i in range(trials):
        rng = trial_rng(seed, i)
        inst = gen_gap(rng, max_jobs=6, pair_mode="small", name=f"tilde-{i}")
        market = market_from_instance(inst)
        bids = market.truthful_bids()
        a2 = gap_mech_2(market, bids, lam)
        astar = reference_astar(market, bids, lam)
        tilde = tilde_astar_values(market, astar, lam)
        if 2 * a2.total_value < tilde:
            return TrialResult(
                False, f"{inst.name}: 2*{a2.total_value} < restricted value {tilde}"
            )
    return TrialResult(True, f"{trials} markets, greedy >= half of restricted value")


def astar_approx_suite(trials: int, seed: int, lam: int = 3) -> TrialResult:
    """(2 + 1/(lam-1)) * v(A*) bounds the small-pair optimum."""
    from .instance import validate_instance, instance_to_doc

    factor = Fraction(2) + Fraction(1, lam - 1)
    for i in range(trials):
        rng = trial_rng(seed, i)
        inst = gen_gap(rng, max_jobs=5, name=f"astar-{i}")
        market = market_from_instance(inst)
        astar = reference_astar(market, market.truthful_bids(), lam)
        # Optimum restricted to small pairs: drop the large items.
        doc = instance_to_doc(inst)
        caps = market.machine_capacity
        keep = {
            it.id
            for it in inst.items
            if it.capacity is not None and it.capacity <= caps[it.machine] / lam
        }
        doc["items"] = [entry for entry in doc["items"] if entry["id"] in keep]
        doc["agents"] = [[i_ for i_ in held if i_ in keep] for held in doc["agents"]]
        small_inst = validate_instance(doc, name=f"{inst.name}-small")
        opt_small, _ = exact_opt(small_inst)
        if factor * astar.total_value < opt_small:
            return TrialResult(
                False,
                f"{inst.name}: {factor}*{astar.total_value} < small optimum {opt_small}",
            )
    return TrialResult(True, f"{trials} markets, bound holds")


def order_independence_suite(trials: int, seed: int, lam: int = 3) -> TrialResult:
    """Under small pairs and virtual capacities, deferred acceptance lands on
    the same assignment for any proposal order."""
    from .gap import _filter_small

    for i in range(trials):
        rng = trial_rng(seed, i)
        inst = gen_gap(rng, max_jobs=5, pair_mode="small", name=f"order-{i}")
        market = market_from_instance(inst)
        bids = _filter_small(market, market.truthful_bids(), lam)
        caps = virtual_capacities(market, lam)
        baseline = sm_da_alg(market, bids, virtual_caps=caps)
        for attempt in range(3):
            shuffle_rng = random.Random(f"{seed}:{i}:{attempt}")
            variant = sm_da_alg(
                market,
                bids,
                virtual_caps=caps,
                choose_proposal=lambda cands: shuffle_rng.choice(cands),
            )
            if variant.machine_of != baseline.machine_of:
                return TrialResult(
                    False,
                    f"{inst.name}: order {attempt} gave {variant.pairs()} "
                    f"vs {baseline.pairs()}",
                )
    return TrialResult(True, f"{trials} markets x3 orders, identical assignments")


def discard_bound_suite(trials: int, seed: int) -> TrialResult:
    """The total value a group partition discards never exceeds v_max."""
    for i in range(trials):
        rng = trial_rng(seed, i)
        inst = gen_matching(rng, "mul", max_edges=10, name=f"discard-{i}")
        bids = inst.truthful_bids()
        partition = partition_groups(inst, bids)
        dropped = sum(
            (inst.item_by_id[e].value for e in partition.discarded), Fraction(0)
        )
        if dropped > partition.v_max and partition.v_max > 0:
            return TrialResult(
                False, f"{inst.name}: discarded value {dropped} > v_max {partition.v_max}"
            )
    return TrialResult(True, f"{trials} partitions, discarded value <= v_max")


def fractional_dominance_suite(trials: int, seed: int) -> TrialResult:
    """The fractional knapsack value dominates the integral optimum."""
    from .knapsack import fractional_opt

    for i in range(trials):
        rng = trial_rng(seed, i)
        inst = gen_knapsack(rng, "mul", max_items=9, name=f"fracdom-{i}")
        assert inst.constraint is not None
        budget = inst.constraint.capacity  # type: ignore[union-attr]
        opt, _ = exact_opt(inst)
        frac = fractional_opt(list(inst.items), budget)
        if frac.value < opt:
            return TrialResult(False, f"{inst.name}: fractional {frac.value} < integral {opt}")
    return TrialResult(True, f"{trials} instances, LP value >= integral optimum")


def _expect_witness(
    mechanism: str,
    instance: Instance,
    truth_utility: Fraction,
    lie_utility: Fraction,
) -> TrialResult:
    runner = bind(mechanism)
    report = audit_truthfulness(runner, instance, "universal", mechanism_name=mechanism)
    w = report.witness
    if w is None:
        return TrialResult(False, f"{instance.name}: expected a manipulation, audit found none")
    if (w.utility_truth, w.utility_misreport) != (truth_utility, lie_utility):
        return TrialResult(
            False,
            f"{instance.name}: witness gap {w.utility_truth} -> {w.utility_misreport}, "
            f"expected {truth_utility} -> {lie_utility}",
        )
    if not verify_witness(report, runner, instance):
        return TrialResult(False, f"{instance.name}: witness failed re-verification")
    return TrialResult(
        True, f"{instance.name}: manipulable exactly {truth_utility} -> {lie_utility}"
    )


def fixture_regressions() -> list[tuple[str, TrialResult]]:
    """The built-in counterexample and lower-bound assertions."""
    fx = builtin_fixtures()
    results: list[tuple[str, TrialResult]] = []

    lb = fx["lowerbound-matching"]
    opt, _ = exact_opt(lb)
    picked = evaluate(lb, [frozenset({"t1u1"}), frozenset({"t2u2"})])[0]
    greedy_total = bind("matching-greedy-unit")(lb, lb.truthful_bids(), None).total_value
    ok = opt == Fraction(21, 10) == picked and greedy_total == Fraction(21, 10)
    results.append(
        (
            "fixture-lowerbound-matching",
            TrialResult(ok, f"optimum {opt}, crossing pair value {picked}, greedy {greedy_total}"),
        )
    )

    lbm = fx["lowerbound-matroid"]
    opt_m, _ = exact_opt(lbm)
    greedy_m = bind("matroid-greedy-unit")(lbm, lbm.truthful_bids(), None).total_value
    ok = opt_m == Fraction(21, 10) and greedy_m == Fraction(21, 10) and 2 * greedy_m >= opt_m
    results.append(
        (
            "fixture-lowerbound-matroid",
            TrialResult(ok, f"optimum {opt_m}, greedy {greedy_m}"),
        )
    )

    results.append(
        (
            "fixture-figA-max-matching",
            _expect_witness("max-matching", fx["figA-maxmatching"], Fraction(10), Fraction(20)),
        )
    )
    results.append(
        (
            "fixture-figB-greedy-mul",
            _expect_witness("matching-greedy-mul", fx["figB-greedy"], Fraction(10), Fraction(12)),
        )
    )
    results.append(
        (
            "fixture-c2-sm-da",
            _expect_witness("sm-da", fx["c2-gap"], Fraction(0), Fraction(1, 10)),
        )
    )

    c2 = fx["c2-gap"]
    market = market_from_instance(c2)
    assignment = sm_da_alg(market, market.truthful_bids())
    expected = {"1": "y", "2": "z", "3": "x"}
    results.append(
        (
            "fixture-c2-assignment",
            TrialResult(
                assignment.machine_of == expected,
                f"deferred acceptance gave {dict(sorted(assignment.machine_of.items()))}",
            ),
        )
    )
    return results


UNIVERSAL_MECHANISMS = (
    "matroid-greedy-mul",
    "matroid-greedy-unit",
    "matching-greedy-unit",
    "sm-greedy",
    "gap-mech-1",
    "gap-mech-2",
    "ks-unit-sample",
    "ks-unit-mechanism",
    "gap-mech-3",
    "gap-main",
)

EXPECTATION_MECHANISMS = (
    "matching-mul-alg",
    "ks-mul-large-agent",
    "ks-mul-sample",
    "ks-mul-mechanism",
)

INVARIANCE_GENERATORS = (
    "gap-job-value",
    "gap-job-capacity",
    "gap-machine-value",
    "gap-machine-capacity",
)


def paper_check_suites(scale: int = 1) -> list[tuple[str, Callable[[], TrialResult]]]:
    """The full desk-scale battery behind the ``paper-check`` command.

    ``scale`` multiplies trial counts; 1 keeps the run near a minute.
    """
    s = scale
    checks: list[tuple[str, Callable[[], TrialResult]]] = []
    checks.append(
        ("matroid-mul-optimal", lambda: matroid_optimality_suite(60 * s, seed=101))
    )
    checks.append(
        (
            "ratio-matroid-unit<=2",
            lambda: ratio_bound_suite(
                "matroid-greedy-unit", "matroid-unit", Fraction(2), 60 * s, seed=102
            ),
        )
    )
    checks.append(
        (
            "ratio-matching-unit<=3",
            lambda: ratio_bound_suite(
                "matching-greedy-unit", "matching-unit", Fraction(3), 60 * s, seed=103
            ),
        )
    )
    for gen_name in INVARIANCE_GENERATORS:
        checks.append(
            (
                f"ratio-special-mix<=4-{gen_name.removeprefix('gap-')}",
                lambda g=gen_name: ratio_bound_suite(
                    "gap-special-mix", g, Fraction(4), 50 * s, seed=104
                ),
            )
        )
    checks.append(
        (
            "ratio-gap-mech-1<=2lam",
            lambda: ratio_bound_suite(
                "gap-mech-1", "gap-large", Fraction(6), 50 * s, seed=105
            ),
        )
    )
    for name in UNIVERSAL_MECHANISMS:
        checks.append(
            (
                f"truthful-universal-{name}",
                lambda n=name: truthfulness_suite(n, "universal", 25 * s, seed=106),
            )
        )
    for name in EXPECTATION_MECHANISMS:
        checks.append(
            (
                f"truthful-expectation-{name}",
                lambda n=name: truthfulness_suite(n, "expectation", 15 * s, seed=107),
            )
        )
    checks.append(("stability-virtual-caps", lambda: stability_suite(60 * s, seed=108)))
    checks.append(("sample-vs-full-da", lambda: not_big_improve_suite(40 * s, seed=109)))
    checks.append(("knapsack-threshold-lemma", lambda: threshold_lemma_suite(120 * s, seed=110)))
    checks.append(("sampling-lemma", lambda: sampling_lemma_suite(40 * s, seed=111)))
    checks.append(("mech2-vs-restricted-da", lambda: mech2_vs_tilde_suite(40 * s, seed=112)))
    checks.append(("full-da-approx", lambda: astar_approx_suite(25 * s, seed=113)))
    checks.append(("da-order-independence", lambda: order_independence_suite(25 * s, seed=114)))
    checks.append(("group-discard-bound", lambda: discard_bound_suite(60 * s, seed=115)))
    checks.append(("fractional-dominance", lambda: fractional_dominance_suite(60 * s, seed=116)))
    return checks


def run_paper_check(scale: int = 1) -> list[tuple[str, TrialResult]]:
    results = [(name, fn()) for name, fn in paper_check_suites(scale)]
    results.extend(fixture_regressions())
    covered = set()
    for name in UNIVERSAL_MECHANISMS + EXPECTATION_MECHANISMS:
        covered.add(name)
    covered.update(
        {"gap-special-mix", "max-matching", "matching-greedy-mul", "sm-da", "sm-greedy"}
    )
    from .registry import MECHANISMS

    missing = set(MECHANISMS) - covered
    results.append(
        (
            "registry-coverage",
            TrialResult(not missing, f"uncovered mechanisms: {sorted(missing) or 'none'}"),
        )
    )
    return results
