"""Exact optimum oracles, size-gated.

Every oracle returns the true optimum and a witness selection, self-checked
for feasibility and value. When an instance exceeds the gate for the exact
method the oracle refuses with SizeGateError; it never approximates silently.

Methods: dynamic programming for knapsack with integer capacities (grouped by
agent under unit demand), pruned exhaustive search for matroid and matching
(at most 20 items), and pruned exhaustive assignment search for gap with a
(machines+1)^jobs node gate.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import InstanceError, SizeGateError
from .instance import (
    Instance,
    Item,
    KnapsackBudget,
    MachinePark,
    is_feasible,
    is_independent,
)

ENUM_ITEM_GATE = 20
KNAPSACK_DP_GATE = 10**4
GAP_NODE_GATE = 10**6


def exact_opt(instance: Instance) -> tuple[Fraction, frozenset[str]]:
    """True optimum value and a witness, respecting the demand mode."""
    if instance.kind == "knapsack":
        value, witness = _knapsack_opt(instance)
    elif instance.kind in ("matroid", "matching"):
        value, witness = _enumerate_opt(instance)
    elif instance.kind == "gap":
        value, witness = _gap_opt(instance)
    else:
        raise InstanceError(f"unknown kind {instance.kind!r}")
    # Self-check: the witness must be feasible and achieve the value.
    if not is_feasible(instance, witness):
        raise InstanceError("oracle produced an infeasible witness")
    achieved = sum((instance.item_by_id[i].value for i in witness), Fraction(0))
    if achieved != value:
        raise InstanceError("oracle witness does not achieve its value")
    return value, witness


def _unit_groups(instance: Instance) -> list[list[Item]]:
    """Item groups with an at-most-one constraint: one per owning agent,
    singletons for unowned items."""
    groups = [[instance.item_by_id[i] for i in held] for held in instance.agents if held]
    owned = {i for held in instance.agents for i in held}
    for it in instance.items:
        if it.id not in owned:
            groups.append([it])
    return groups


def _knapsack_opt(instance: Instance) -> tuple[Fraction, frozenset[str]]:
    assert isinstance(instance.constraint, KnapsackBudget)
    budget = instance.constraint.capacity
    integral = budget.denominator == 1 and all(
        it.capacity is not None and it.capacity.denominator == 1 for it in instance.items
    )
    if integral and budget <= KNAPSACK_DP_GATE:
        return _knapsack_dp(instance, int(budget))
    if len(instance.items) <= ENUM_ITEM_GATE:
        return _enumerate_opt(instance)
    raise SizeGateError(
        "knapsack oracle needs integer capacities with budget <= "
        f"{KNAPSACK_DP_GATE} or at most {ENUM_ITEM_GATE} items"
    )


def _knapsack_dp(instance: Instance, budget: int) -> tuple[Fraction, frozenset[str]]:
    """Capacity-indexed DP; under unit demand items are grouped per agent."""
    if instance.demand == "unit":
        groups = _unit_groups(instance)
    else:
        groups = [[it] for it in instance.items]
    zero = Fraction(0)
    best: list[Fraction] = [zero] * (budget + 1)
    pick: list[list[str | None]] = []
    for group in groups:
        row: list[str | None] = [None] * (budget + 1)
        nxt = best[:]
        for it in group:
            cap = int(it.capacity)  # type: ignore[arg-type]
            if cap > budget:
                continue
            for w in range(budget, cap - 1, -1):
                candidate = best[w - cap] + it.value
                if candidate > nxt[w]:
                    nxt[w] = candidate
                    row[w] = it.id
        best = nxt
        pick.append(row)
    w = max(range(budget + 1), key=lambda j: (best[j], -j))
    witness: set[str] = set()
    for gi in range(len(groups) - 1, -1, -1):
        item_id = pick[gi][w]
        if item_id is not None:
            witness.add(item_id)
            w -= int(instance.item_by_id[item_id].capacity)  # type: ignore[arg-type]
    return best[budget], frozenset(witness)


def _enumerate_opt(instance: Instance) -> tuple[Fraction, frozenset[str]]:
    """Pruned search over item subsets for matroid, matching, and small
    knapsack instances."""
    if len(instance.items) > ENUM_ITEM_GATE:
        raise SizeGateError(f"enumeration oracle limited to {ENUM_ITEM_GATE} items")
    items = sorted(instance.items, key=lambda it: (-it.value, it.id))
    suffix = [Fraction(0)] * (len(items) + 1)
    for i in range(len(items) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + max(items[i].value, Fraction(0))
    unit = instance.demand == "unit"
    kind = instance.kind
    budget = (
        instance.constraint.capacity
        if isinstance(instance.constraint, KnapsackBudget)
        else None
    )

    best_value = Fraction(0)
    best_set: frozenset[str] = frozenset()
    chosen: set[str] = set()
    served: set[int] = set()
    endpoints: set[str] = set()
    load = Fraction(0)

    def admissible(it: Item) -> bool:
        if unit:
            owner = instance.agent_of.get(it.id)
            if owner is not None and owner in served:
                return False
        if kind == "matroid":
            return is_independent(instance.constraint, chosen | {it.id})
        if kind == "matching":
            return it.u not in endpoints and it.v not in endpoints
        assert budget is not None
        return load + it.capacity <= budget  # type: ignore[operator]

    def walk(idx: int, value: Fraction) -> None:
        nonlocal best_value, best_set, load
        if value > best_value:
            best_value, best_set = value, frozenset(chosen)
        if idx == len(items) or value + suffix[idx] <= best_value:
            return
        it = items[idx]
        if admissible(it):
            owner = instance.agent_of.get(it.id)
            chosen.add(it.id)
            if unit and owner is not None:
                served.add(owner)
            if kind == "matching":
                endpoints.update((it.u, it.v))  # type: ignore[arg-type]
            if kind == "knapsack":
                load += it.capacity  # type: ignore[operator]
            walk(idx + 1, value + it.value)
            chosen.discard(it.id)
            if unit and owner is not None:
                served.discard(owner)
            if kind == "matching":
                endpoints.difference_update((it.u, it.v))
            if kind == "knapsack":
                load -= it.capacity  # type: ignore[operator]
        walk(idx + 1, value)

    walk(0, Fraction(0))
    return best_value, best_set


def _gap_opt(instance: Instance) -> tuple[Fraction, frozenset[str]]:
    assert isinstance(instance.constraint, MachinePark)
    by_job: dict[str, list[Item]] = {}
    for it in instance.items:
        by_job.setdefault(it.job, []).append(it)  # type: ignore[arg-type]
    jobs = sorted(by_job)
    n_machines = len(instance.constraint.machines)
    if (n_machines + 1) ** max(len(jobs), 1) > GAP_NODE_GATE:
        raise SizeGateError(
            f"gap oracle gate exceeded: (machines+1)^jobs > {GAP_NODE_GATE}"
        )
    options = {
        j: sorted(by_job[j], key=lambda it: (-it.value, it.id)) for j in jobs
    }
    best_after = [Fraction(0)] * (len(jobs) + 1)
    for i in range(len(jobs) - 1, -1, -1):
        top = options[jobs[i]][0].value if options[jobs[i]] else Fraction(0)
        best_after[i] = best_after[i + 1] + top

    capacity = dict(instance.constraint.machines)
    load: dict[str, Fraction] = {k: Fraction(0) for k in capacity}
    chosen: list[str] = []
    best_value = Fraction(0)
    best_set: frozenset[str] = frozenset()

    def walk(idx: int, value: Fraction) -> None:
        nonlocal best_value, best_set
        if value > best_value:
            best_value, best_set = value, frozenset(chosen)
        if idx == len(jobs) or value + best_after[idx] <= best_value:
            return
        for it in options[jobs[idx]]:
            assert it.machine is not None and it.capacity is not None
            if load[it.machine] + it.capacity <= capacity[it.machine]:
                load[it.machine] += it.capacity
                chosen.append(it.id)
                walk(idx + 1, value + it.value)
                chosen.pop()
                load[it.machine] -= it.capacity
        walk(idx + 1, value)  # leave the job unassigned

    walk(0, Fraction(0))
    return best_value, best_set
