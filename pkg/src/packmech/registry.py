"""Name-addressable mechanism registry.

Every mechanism in the package is reachable here by its CLI name with a
uniform signature ``run(instance, bids, tape)`` once parameters are bound.
Reference mechanisms that are known to be manipulable (plain greedy on
multi-unit matching, maximum-weight matching, plain deferred acceptance) are
registered too, so the auditor can reproduce their failures.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from . import gap as gapmod
from . import knapsack as ks
from . import matching as matchmod
from . import matroid as matroidmod
from .errors import InstanceError
from .instance import Bids, Instance, Outcome, check_bids, make_outcome
from .stable import (
    GapAssignment,
    market_bids_from_instance,
    market_from_instance,
    sm_da_alg,
    sm_greedy,
)
from .tape import Tape


@dataclass(frozen=True)
class Params:
    lam: int | None = None  # size parameter; default depends on the family
    mu: Fraction | None = None

    def knapsack_lambda(self) -> int:
        return self.lam if self.lam is not None else ks.DEFAULT_LAMBDA

    def gap_config(self) -> gapmod.Gap3Config:
        return gapmod.Gap3Config(
            lam=self.lam if self.lam is not None else gapmod.DEFAULT_GAP_LAMBDA,
            mu=self.mu if self.mu is not None else gapmod.DEFAULT_GAP_MU,
        )

    def gap_lambda(self) -> int:
        return self.lam if self.lam is not None else gapmod.DEFAULT_GAP_LAMBDA


RunFn = Callable[[Instance, Bids, Tape, Params], Outcome]


@dataclass(frozen=True)
class MechanismSpec:
    name: str
    kind: str
    demands: tuple[str, ...]
    randomized: bool
    truthful: bool  # documented design intent; the auditor checks it
    run: RunFn


def _gap_outcome(instance: Instance, bids: Bids, assignment: GapAssignment) -> Outcome:
    job_agent: dict[str, int] = {}
    for idx, held in enumerate(instance.agents):
        if held:
            job = instance.item_by_id[held[0]].job
            assert job is not None
            job_agent[job] = idx
    per_agent: list[set[str]] = [set() for _ in instance.agents]
    pair_item = {
        (it.job, it.machine): it.id for it in instance.items
    }
    for job, machine in assignment.machine_of.items():
        per_agent[job_agent[job]].add(pair_item[(job, machine)])
    return make_outcome(instance, bids, per_agent)


def _market_runner(
    fn: Callable[..., GapAssignment]
) -> RunFn:
    def run(instance: Instance, bids: Bids, tape: Tape, params: Params) -> Outcome:
        check_bids(instance, bids)
        market = market_from_instance(instance)
        mbids = market_bids_from_instance(instance, bids)
        return _gap_outcome(instance, bids, fn(market, mbids, tape, params))

    return run


def _run_sm_greedy(m, b, tape, params):
    return sm_greedy(m, b)


def _run_sm_da(m, b, tape, params):
    return sm_da_alg(m, b)


def _run_special_mix(m, b, tape, params):
    return gapmod.gap_special_mix(m, b, tape)


def _run_gap1(m, b, tape, params):
    return gapmod.gap_mech_1(m, b, params.gap_lambda())


def _run_gap2(m, b, tape, params):
    return gapmod.gap_mech_2(m, b, params.gap_lambda())


def _run_gap3(m, b, tape, params):
    final, _ = gapmod.gap_mech_3(m, b, params.gap_config(), tape)
    return final


def _run_gap_main(m, b, tape, params):
    return gapmod.gap_main(m, b, params.gap_config(), tape)


MECHANISMS: dict[str, MechanismSpec] = {
    spec.name: spec
    for spec in [
        MechanismSpec(
            "matroid-greedy-mul", "matroid", ("mul",), False, True,
            lambda inst, bids, tape, params: matroidmod.matroid_greedy_mul(inst, bids),
        ),
        MechanismSpec(
            "matroid-greedy-unit", "matroid", ("unit",), False, True,
            lambda inst, bids, tape, params: matroidmod.matroid_greedy_unit(inst, bids),
        ),
        MechanismSpec(
            "matching-greedy-unit", "matching", ("unit",), False, True,
            lambda inst, bids, tape, params: matchmod.matching_greedy_unit(inst, bids),
        ),
        MechanismSpec(
            "matching-greedy-mul", "matching", ("mul",), False, False,
            lambda inst, bids, tape, params: matchmod.matching_greedy_mul(inst, bids),
        ),
        MechanismSpec(
            "max-matching", "matching", ("mul",), False, False,
            lambda inst, bids, tape, params: matchmod.max_matching_mechanism(inst, bids),
        ),
        MechanismSpec(
            "matching-mul-alg", "matching", ("mul",), True, True,
            lambda inst, bids, tape, params: matchmod.matching_mul_alg(inst, bids, tape),
        ),
        MechanismSpec(
            "ks-unit-sample", "knapsack", ("unit",), True, True,
            lambda inst, bids, tape, params: ks.ks_unit_sample(
                inst, bids, params.knapsack_lambda(), tape
            ),
        ),
        MechanismSpec(
            "ks-unit-mechanism", "knapsack", ("unit",), True, True,
            lambda inst, bids, tape, params: ks.ks_unit_mechanism(
                inst, bids, params.knapsack_lambda(), tape
            ),
        ),
        MechanismSpec(
            "ks-mul-large-agent", "knapsack", ("mul",), True, True,
            lambda inst, bids, tape, params: ks.ks_mul_large_agent(inst, bids, tape),
        ),
        MechanismSpec(
            "ks-mul-sample", "knapsack", ("mul",), True, True,
            lambda inst, bids, tape, params: ks.ks_mul_sample(
                inst, bids, params.knapsack_lambda(), tape
            ),
        ),
        MechanismSpec(
            "ks-mul-mechanism", "knapsack", ("mul",), True, True,
            lambda inst, bids, tape, params: ks.ks_mul_mechanism(
                inst, bids, params.knapsack_lambda(), tape
            ),
        ),
        MechanismSpec("sm-greedy", "gap", ("unit",), False, True, _market_runner(_run_sm_greedy)),
        MechanismSpec("sm-da", "gap", ("unit",), False, False, _market_runner(_run_sm_da)),
        MechanismSpec(
            "gap-special-mix", "gap", ("unit",), True, True, _market_runner(_run_special_mix)
        ),
        MechanismSpec("gap-mech-1", "gap", ("unit",), False, True, _market_runner(_run_gap1)),
        MechanismSpec("gap-mech-2", "gap", ("unit",), False, True, _market_runner(_run_gap2)),
        MechanismSpec("gap-mech-3", "gap", ("unit",), True, True, _market_runner(_run_gap3)),
        MechanismSpec("gap-main", "gap", ("unit",), True, True, _market_runner(_run_gap_main)),
    ]
}


def get_mechanism(name: str) -> MechanismSpec:
    spec = MECHANISMS.get(name)
    if spec is None:
        raise KeyError(f"unknown mechanism {name!r}")
    return spec


def bind(name: str, params: Params = Params()) -> Callable[[Instance, Bids, Tape], Outcome]:
    """Close a mechanism over its parameters; validates kind/demand per call."""
    spec = get_mechanism(name)

    def run(instance: Instance, bids: Bids, tape: Tape) -> Outcome:
        if instance.kind != spec.kind or instance.demand not in spec.demands:
            raise InstanceError(
                f"mechanism {name!r} needs kind {spec.kind}/" f"{'|'.join(spec.demands)}, "
                f"got {instance.kind}/{instance.demand}"
            )
        return spec.run(instance, bids, tape, params)

    return run
