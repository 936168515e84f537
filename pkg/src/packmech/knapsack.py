"""Knapsack mechanisms built on ratio greedy and fractional relaxations.

Plain ratio greedy is not truthful for knapsack markets (agents rank items by
value, the scan ranks by density), so the truthful mechanisms here combine
three devices:

  * sampling half of the agents to calibrate a density threshold,
  * serving the remaining agents one by one in the canonical order,
  * for multi-unit demand, paying each served agent its *fractional* optimum
    in expectation by including the single fractional item with probability
    equal to its share.

All sampling and inclusion coins come from the tape, so expectations are
exact and every run is replayable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import InstanceError
from .instance import (
    Bids,
    Instance,
    Item,
    KnapsackBudget,
    Outcome,
    check_bids,
    make_outcome,
    ratio_order_key,
)
from .tape import Tape

DEFAULT_LAMBDA = 144  # small enough items make every sampling bound kick in


@dataclass(frozen=True)
class FractionalSolution:
    """Ratio-greedy fractional knapsack: full items plus at most one share."""

    full: tuple[str, ...]
    fractional: tuple[str, Fraction] | None  # (item id, share in (0,1))
    value: Fraction
    capacity_used: Fraction


def fractional_opt(items: Sequence[Item], budget: Fraction) -> FractionalSolution:
    """Fractional knapsack optimum by the greedy rule.

    Scan by density descending (ties: smaller capacity, then id); take items
    fully while they fit; the first item that does not fit is taken at the
    share that exactly exhausts the budget. A share of zero means no
    fractional item. The value equals the LP optimum.
    """
    if budget < 0:
        raise InstanceError("fractional_opt needs a non-negative budget")
    order = sorted(items, key=ratio_order_key)
    full: list[str] = []
    used = Fraction(0)
    value = Fraction(0)
    fractional = None
    for item in order:
        assert item.capacity is not None
        if used + item.capacity <= budget:
            full.append(item.id)
            used += item.capacity
            value += item.value
        else:
            share = (budget - used) / item.capacity
            if share > 0:
                fractional = (item.id, share)
                value += share * item.value
                used = budget
            break
    return FractionalSolution(tuple(full), fractional, value, used)


def greedy_fill(items: Sequence[Item], budget: Fraction) -> tuple[Fraction, frozenset[str]]:
    """Integral ratio greedy: scan by density, take whatever still fits."""
    chosen: set[str] = set()
    used = Fraction(0)
    value = Fraction(0)
    for item in sorted(items, key=ratio_order_key):
        assert item.capacity is not None
        if used + item.capacity <= budget:
            chosen.add(item.id)
            used += item.capacity
            value += item.value
    return value, frozenset(chosen)


def _budget(instance: Instance) -> Fraction:
    assert isinstance(instance.constraint, KnapsackBudget)
    return instance.constraint.capacity


def _reported_items(instance: Instance, bids: Bids) -> list[Item]:
    return [instance.item_by_id[i] for bid in bids for i in bid]


def _check(instance: Instance, bids: Bids, demand: str, op: str) -> None:
    if instance.kind != "knapsack" or instance.demand != demand:
        raise InstanceError(f"{op} needs a knapsack/{demand} instance")
    check_bids(instance, bids)


def _check_lambda(lam: int) -> None:
    if not isinstance(lam, int) or lam < 2:
        raise InstanceError("lambda must be an integer >= 2")


def _sample_agents(instance: Instance, tape: Tape) -> set[int]:
    """One fair coin per agent, in canonical order; True lands in the sample."""
    return {
        idx
        for idx in range(instance.n_agents)
        if tape.bit(("sample", idx), Fraction(1, 2))
    }


def _best_single_item(instance: Instance, bids: Bids) -> Outcome:
    """The feasible reported item of largest value (ties: smaller id)."""
    budget = _budget(instance)
    candidates = [it for it in _reported_items(instance, bids) if it.capacity <= budget]
    per_agent: list[set[str]] = [set() for _ in bids]
    if candidates:
        winner = min(candidates, key=lambda it: (-it.value, it.id))
        per_agent[instance.agent_of[winner.id]].add(winner.id)
    return make_outcome(instance, bids, per_agent)


def ks_unit_sample(instance: Instance, bids: Bids, lam: int, tape: Tape) -> Outcome:
    """Sample-and-threshold mechanism for unit-demand knapsack.

    Items larger than C/lambda are deleted. Sampled agents win nothing; their
    greedy value V sets the density threshold V/(2C). Remaining agents are
    served in canonical order with their best item that passes the threshold
    and still fits.
    """
    _check(instance, bids, "unit", "ks_unit_sample")
    _check_lambda(lam)
    budget = _budget(instance)
    cap = budget / lam
    kept = [it for it in _reported_items(instance, bids) if it.capacity <= cap]
    sample = _sample_agents(instance, tape)
    sample_items = [it for it in kept if instance.agent_of[it.id] in sample]
    v_sample, _ = greedy_fill(sample_items, budget)
    threshold = v_sample / (2 * budget)
    per_agent: list[set[str]] = [set() for _ in bids]
    used = Fraction(0)
    for idx in range(instance.n_agents):
        if idx in sample:
            continue
        feasible = [
            it
            for it in kept
            if instance.agent_of[it.id] == idx
            and it.ratio >= threshold
            and used + it.capacity <= budget
        ]
        if feasible:
            pick = min(feasible, key=lambda it: (-it.value, it.capacity, it.id))
            per_agent[idx].add(pick.id)
            used += pick.capacity  # type: ignore[operator]
    return make_outcome(instance, bids, per_agent)


def ks_unit_mechanism(instance: Instance, bids: Bids, lam: int, tape: Tape) -> Outcome:
    """Fair coin between the best single item and ks_unit_sample."""
    _check(instance, bids, "unit", "ks_unit_mechanism")
    _check_lambda(lam)
    if tape.bit(("mech",), Fraction(1, 2)):
        return ks_unit_sample(instance, bids, lam, tape)
    return _best_single_item(instance, bids)


def ks_mul_large_agent(instance: Instance, bids: Bids, tape: Tape) -> Outcome:
    """Serve the agent with the best fractional optimum on half the budget.

    Items larger than C/2 are dropped; the winning agent receives its fully
    packed items plus the fractional item with probability equal to its
    share, so its expected utility equals its fractional optimum. Feasible
    within C because the solution fits C/2 and the extra item is at most C/2.
    """
    _check(instance, bids, "mul", "ks_mul_large_agent")
    budget = _budget(instance)
    half = budget / 2
    per_agent: list[set[str]] = [set() for _ in bids]
    best: tuple[int, FractionalSolution] | None = None
    for idx in range(instance.n_agents):
        items = [instance.item_by_id[i] for i in bids[idx]
                 if instance.item_by_id[i].capacity <= half]
        sol = fractional_opt(items, half)
        if best is None or sol.value > best[1].value:
            best = (idx, sol)
    if best is not None:
        idx, sol = best
        chosen = set(sol.full)
        if sol.fractional is not None:
            item_id, share = sol.fractional
            if tape.bit(("alpha", item_id), share):
                chosen.add(item_id)
        per_agent[idx] = chosen
    return make_outcome(instance, bids, per_agent)


def ks_mul_sample(instance: Instance, bids: Bids, lam: int, tape: Tape) -> Outcome:
    """Sample-and-threshold mechanism for multi-unit knapsack.

    Like ks_unit_sample, but each served agent receives its fractional
    optimum within the reduced budget C - C/lambda minus what is already
    committed. The first fractional share stops the scan: the share coin
    decides its inclusion and the reserve C/lambda keeps the result within C.
    """
    _check(instance, bids, "mul", "ks_mul_sample")
    _check_lambda(lam)
    budget = _budget(instance)
    cap = budget / lam
    reduced = budget - cap
    kept = [it for it in _reported_items(instance, bids) if it.capacity <= cap]
    sample = _sample_agents(instance, tape)
    sample_items = [it for it in kept if instance.agent_of[it.id] in sample]
    v_sample, _ = greedy_fill(sample_items, budget)
    threshold = v_sample / (2 * budget)
    per_agent: list[set[str]] = [set() for _ in bids]
    used = Fraction(0)
    for idx in range(instance.n_agents):
        if idx in sample:
            continue
        mine = [
            it
            for it in kept
            if instance.agent_of[it.id] == idx and it.ratio >= threshold
        ]
        sol = fractional_opt(mine, reduced - used)
        per_agent[idx] = set(sol.full)
        used += sum((instance.item_by_id[i].capacity for i in sol.full), Fraction(0))
        if sol.fractional is not None:
            item_id, share = sol.fractional
            if tape.bit(("alpha", item_id), share):
                per_agent[idx].add(item_id)
            break
    return make_outcome(instance, bids, per_agent)


def ks_mul_mechanism(instance: Instance, bids: Bids, lam: int, tape: Tape) -> Outcome:
    """Uniform mix of best single item, large-agent, and sample mechanisms."""
    _check(instance, bids, "mul", "ks_mul_mechanism")
    _check_lambda(lam)
    arm = tape.choice(("mech",), 3)
    if arm == 0:
        return _best_single_item(instance, bids)
    if arm == 1:
        return ks_mul_large_agent(instance, bids, tape)
    return ks_mul_sample(instance, bids, lam, tape)
