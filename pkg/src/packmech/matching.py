"""Matching mechanisms: truthful greedy for unit demand, and a randomized
group mechanism for multi-unit demand.

The unit-demand greedy scans edges by decreasing value and picks an edge when
both endpoints are free and its agent has not won yet (3-approximation,
truthful). Plain greedy and maximum-weight matching are also provided as
*reference* mechanisms for multi-unit demand: both are manipulable and exist
so the auditor can demonstrate it.

The multi-unit mechanism buckets edges into value groups spanning a factor of
two each, picks one group uniformly at random, and then lets agents --
starting with the first agent claiming a maximum-value edge -- greedily add a
maximum-weight matching among their own edges on still-free vertices. Exact
expectations come from enumerating the single group draw.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import InstanceError
from .instance import (
    Bids,
    Instance,
    Item,
    Outcome,
    check_bids,
    empty_outcome,
    make_outcome,
    value_order_key,
)
from .tape import Tape


def matching_greedy_unit(instance: Instance, bids: Bids) -> Outcome:
    """Value-greedy matching, one edge per agent."""
    if instance.kind != "matching" or instance.demand != "unit":
        raise InstanceError("matching_greedy_unit needs a matching/unit instance")
    check_bids(instance, bids)
    reported = sorted(
        (instance.item_by_id[i] for bid in bids for i in bid), key=value_order_key
    )
    used: set[str] = set()
    served: set[int] = set()
    per_agent: list[set[str]] = [set() for _ in bids]
    for edge in reported:
        owner = instance.agent_of[edge.id]
        if owner in served or edge.u in used or edge.v in used:
            continue
        used.update((edge.u, edge.v))  # type: ignore[arg-type]
        served.add(owner)
        per_agent[owner].add(edge.id)
    return make_outcome(instance, bids, per_agent)


def matching_greedy_mul(instance: Instance, bids: Bids) -> Outcome:
    """Plain value-greedy matching with no per-agent cap. Manipulable."""
    if instance.kind != "matching":
        raise InstanceError("matching_greedy_mul needs a matching instance")
    check_bids(instance, bids)
    reported = sorted(
        (instance.item_by_id[i] for bid in bids for i in bid), key=value_order_key
    )
    used: set[str] = set()
    per_agent: list[set[str]] = [set() for _ in bids]
    for edge in reported:
        if edge.u in used or edge.v in used:
            continue
        used.update((edge.u, edge.v))  # type: ignore[arg-type]
        per_agent[instance.agent_of[edge.id]].add(edge.id)
    return make_outcome(instance, bids, per_agent)


def max_weight_matching(edges: Sequence[Item], blocked: Iterable[str] = ()) -> tuple[Fraction, tuple[str, ...]]:
    """Exact maximum-weight matching by branch and bound.

    Edges touching a blocked vertex are discarded up front. Ties resolve
    toward edges earlier in the canonical value order (first strict
    improvement wins), so the result is deterministic.
    """
    banned = set(blocked)
    usable = sorted(
        (e for e in edges if e.u not in banned and e.v not in banned and e.value > 0),
        key=value_order_key,
    )
    suffix = [Fraction(0)] * (len(usable) + 1)
    for i in range(len(usable) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + usable[i].value

    best_value = Fraction(0)
    best_set: tuple[str, ...] = ()

    def walk(idx: int, used: set[str], value: Fraction, chosen: list[str]) -> None:
        nonlocal best_value, best_set
        if value + suffix[idx] <= best_value:
            return
        if idx == len(usable):
            if value > best_value:
                best_value, best_set = value, tuple(chosen)
            return
        edge = usable[idx]
        if edge.u not in used and edge.v not in used:
            used.update((edge.u, edge.v))  # type: ignore[arg-type]
            chosen.append(edge.id)
            walk(idx + 1, used, value + edge.value, chosen)
            chosen.pop()
            used.difference_update((edge.u, edge.v))
        walk(idx + 1, used, value, chosen)

    walk(0, set(), Fraction(0), [])
    return best_value, best_set


def max_matching_mechanism(instance: Instance, bids: Bids) -> Outcome:
    """Output a maximum-weight matching of all reported edges. Manipulable."""
    if instance.kind != "matching":
        raise InstanceError("max_matching_mechanism needs a matching instance")
    check_bids(instance, bids)
    reported = [instance.item_by_id[i] for bid in bids for i in bid]
    _, chosen = max_weight_matching(reported)
    per_agent: list[set[str]] = [set() for _ in bids]
    for item_id in chosen:
        per_agent[instance.agent_of[item_id]].add(item_id)
    return make_outcome(instance, bids, per_agent)


@dataclass(frozen=True)
class GroupPartition:
    """Edges bucketed by value intervals below the maximum reported value.

    ``exponent`` is the integer E with 2^(E-1) < v_max <= 2^E. There are
    ``group_count`` = max(1, ceil(log2 m)) groups, m the instance's
    ground-set size: single octaves (2^(E-j-1), 2^(E-j)] for j = 0..g-2,
    highest first, and a last group reaching down to 2^(E-g-1). Together
    they cover (2^(E-g-1), 2^E]. Edges valued at most 2^(E-g-1) are
    discarded; each is below v_max/m, so their total value never exceeds
    v_max. The priority agent is the first agent in canonical order
    reporting an edge of value v_max.
    """

    exponent: int
    group_count: int
    v_max: Fraction
    groups: tuple[tuple[Fraction, Fraction], ...]  # (low, high], highest first
    members: tuple[frozenset[str], ...]
    discarded: frozenset[str]
    priority_agent: int


def _value_exponent(v: Fraction) -> int:
    """The integer E with 2^(E-1) < v <= 2^E, exactly."""
    if v <= 0:
        raise InstanceError("exponent requires a positive value")
    e = v.numerator.bit_length() - v.denominator.bit_length()
    while Fraction(2) ** e < v:
        e += 1
    while Fraction(2) ** (e - 1) >= v:
        e -= 1
    return e


def group_count(instance: Instance) -> int:
    """max(1, ceil(log2 m)) where m is the instance ground-set size."""
    m = len(instance.items)
    if m <= 1:
        return 1
    return max(1, (m - 1).bit_length())


def partition_groups(instance: Instance, bids: Bids) -> GroupPartition:
    """Bucket the reported edges by value; independent of any tape."""
    check_bids(instance, bids)
    reported = [instance.item_by_id[i] for bid in bids for i in bid]
    g = group_count(instance)
    positive = [e for e in reported if e.value > 0]
    if not positive:
        # Degenerate: nothing to partition; a single empty group.
        return GroupPartition(
            exponent=0,
            group_count=g,
            v_max=Fraction(0),
            groups=((Fraction(0), Fraction(0)),),
            members=(frozenset(),),
            discarded=frozenset(e.id for e in reported),
            priority_agent=0,
        )
    v_max = max(e.value for e in positive)
    exponent = _value_exponent(v_max)
    bounds = [
        (Fraction(2) ** (exponent - j - 1), Fraction(2) ** (exponent - j))
        for j in range(g)
    ]
    # The last group absorbs the final half-octave so that everything above
    # the discard threshold 2^(E-g-1) lies in exactly one group.
    bounds[-1] = (Fraction(2) ** (exponent - g - 1), bounds[-1][1])
    floor = bounds[-1][0]
    members: list[set[str]] = [set() for _ in bounds]
    discarded: set[str] = set(e.id for e in reported if e.value <= 0)
    for e in positive:
        if e.value <= floor:
            discarded.add(e.id)
            continue
        for slot, (low, high) in enumerate(bounds):
            if low < e.value <= high:
                members[slot].add(e.id)
                break
    priority_agent = 0
    for idx, bid in enumerate(bids):
        if any(instance.item_by_id[i].value == v_max for i in bid):
            priority_agent = idx
            break
    return GroupPartition(
        exponent=exponent,
        group_count=g,
        v_max=v_max,
        groups=tuple(bounds),
        members=tuple(frozenset(m) for m in members),
        discarded=frozenset(discarded),
        priority_agent=priority_agent,
    )


def matching_mul_alg(instance: Instance, bids: Bids, tape: Tape) -> Outcome:
    """Randomized group mechanism for multi-unit matching markets.

    Picks one value group uniformly at random, then serves the priority
    agent first and the others in canonical order, giving each a
    maximum-weight matching of its own group edges on free vertices.
    Truthful in expectation.
    """
    if instance.kind != "matching" or instance.demand != "mul":
        raise InstanceError("matching_mul_alg needs a matching/mul instance")
    check_bids(instance, bids)
    if not any(instance.item_by_id[i].value > 0 for bid in bids for i in bid):
        return empty_outcome(instance, bids)
    partition = partition_groups(instance, bids)
    g = tape.choice(("group",), len(partition.groups))
    pool = partition.members[g]
    order = [partition.priority_agent] + [
        i for i in range(instance.n_agents) if i != partition.priority_agent
    ]
    used: set[str] = set()
    per_agent: list[set[str]] = [set() for _ in bids]
    for agent in order:
        own = [instance.item_by_id[i] for i in bids[agent] if i in pool]
        if not own:
            continue
        _, chosen = max_weight_matching(own, blocked=used)
        for item_id in chosen:
            edge = instance.item_by_id[item_id]
            used.update((edge.u, edge.v))  # type: ignore[arg-type]
            per_agent[agent].add(item_id)
    return make_outcome(instance, bids, per_agent)
