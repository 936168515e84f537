"""Greedy mechanisms for matroid-constrained markets.

Items are scanned by decreasing value (ties: smaller capacity, then id) and
added whenever the selection stays independent. Under multi-unit demand this
is welfare-optimal; under unit demand each agent may win at most one item and
the same scan gives a 2-approximation. Both scans are truthful: hiding items
can only remove winning opportunities.
"""

from __future__ import annotations

from .errors import InstanceError
from .instance import (
    Bids,
    Instance,
    Outcome,
    check_bids,
    is_independent,
    make_outcome,
    value_order_key,
)


def _scan(instance: Instance, bids: Bids, one_per_agent: bool) -> Outcome:
    check_bids(instance, bids)
    reported = sorted(
        (instance.item_by_id[i] for bid in bids for i in bid), key=value_order_key
    )
    selected: set[str] = set()
    served: set[int] = set()
    per_agent: list[set[str]] = [set() for _ in bids]
    for item in reported:
        owner = instance.agent_of[item.id]
        if one_per_agent and owner in served:
            continue
        if is_independent(instance.constraint, selected | {item.id}):
            selected.add(item.id)
            served.add(owner)
            per_agent[owner].add(item.id)
    return make_outcome(instance, bids, per_agent)


def matroid_greedy_mul(instance: Instance, bids: Bids) -> Outcome:
    """Value-greedy independent set over the reported items (optimal)."""
    if instance.kind != "matroid" or instance.demand != "mul":
        raise InstanceError("matroid_greedy_mul needs a matroid/mul instance")
    return _scan(instance, bids, one_per_agent=False)


def matroid_greedy_unit(instance: Instance, bids: Bids) -> Outcome:
    """Same scan, at most one win per agent (2-approximation)."""
    if instance.kind != "matroid" or instance.demand != "unit":
        raise InstanceError("matroid_greedy_unit needs a matroid/unit instance")
    return _scan(instance, bids, one_per_agent=True)
