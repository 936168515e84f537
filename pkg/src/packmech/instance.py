"""Instance model for packing markets: items, agents, feasibility, valuation.

An instance is a ground set of items with exact rational values (and, for
knapsack/assignment kinds, capacities), a partition of the items among
agents, a feasibility constraint, and a demand mode:

  * ``unit``  -- at most one item may be selected per agent,
  * ``mul``   -- any number of items per agent.

Agents report subsets of the items they hold; a mechanism selects a feasible
collection of reported items. An agent's utility is the total value of its
selected items.

Everything here is immutable after construction and all operations are pure,
so instances and outcomes can be evaluated concurrently from many workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InstanceError, MechanismError
from .rationals import format_rational, parse_rational

KINDS = ("matroid", "matching", "knapsack", "gap")
DEMANDS = ("unit", "mul")

FORMAT_VERSION = 1

Bids = tuple[frozenset[str], ...]


@dataclass(frozen=True)
class Item:
    """One sellable item: public value, optional capacity, kind payload."""

    id: str
    value: Fraction
    capacity: Fraction | None = None
    u: str | None = None  # matching endpoint
    v: str | None = None  # matching endpoint
    job: str | None = None  # assignment pair
    machine: str | None = None  # assignment pair

    @property
    def ratio(self) -> Fraction:
        """Value density value/capacity; capacity must be present."""
        if self.capacity is None:
            raise InstanceError(f"item {self.id} has no capacity")
        return self.value / self.capacity


@dataclass(frozen=True)
class PartitionMatroid:
    """Disjoint classes covering the ground set, each with a quota."""

    classes: tuple[tuple[frozenset[str], int], ...]


@dataclass(frozen=True)
class UniformMatroid:
    rank: int


@dataclass(frozen=True)
class ExplicitMatroid:
    """An explicitly listed downward-closed family over a tiny ground set."""

    independent: frozenset[frozenset[str]]


@dataclass(frozen=True)
class KnapsackBudget:
    capacity: Fraction


@dataclass(frozen=True)
class MachinePark:
    """Machines of an assignment instance, in declaration order."""

    machines: tuple[tuple[str, Fraction], ...]  # (machine id, capacity)

    @cached_property
    def capacity(self) -> dict[str, Fraction]:
        return dict(self.machines)

    @cached_property
    def order(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.machines)


Constraint = (
    PartitionMatroid | UniformMatroid | ExplicitMatroid | KnapsackBudget | MachinePark | None
)


@dataclass(frozen=True)
class Instance:
    """A validated, canonicalized market instance.

    Items are stored in id order; agents keep their declaration order, which
    is the canonical fixed order used by every mechanism, sampler, and
    tie-break in the package.
    """

    kind: str
    demand: str
    items: tuple[Item, ...]
    agents: tuple[tuple[str, ...], ...]
    constraint: Constraint
    name: str = ""

    @cached_property
    def item_by_id(self) -> dict[str, Item]:
        return {it.id: it for it in self.items}

    @cached_property
    def agent_of(self) -> dict[str, int]:
        """Owning agent index per item id (unowned items are absent)."""
        owner: dict[str, int] = {}
        for idx, ids in enumerate(self.agents):
            for item_id in ids:
                owner[item_id] = idx
        return owner

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    def items_of(self, agent: int) -> tuple[Item, ...]:
        return tuple(self.item_by_id[i] for i in self.agents[agent])

    def truthful_bids(self) -> Bids:
        return tuple(frozenset(ids) for ids in self.agents)


@dataclass(frozen=True)
class Outcome:
    """Per-agent selected item-id sets with exact valuation."""

    selections: tuple[frozenset[str], ...]
    utilities: tuple[Fraction, ...]
    total_value: Fraction

    @property
    def selected(self) -> frozenset[str]:
        out: set[str] = set()
        for sel in self.selections:
            out |= sel
        return frozenset(out)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise InstanceError(message)


def _parse_matroid_constraint(raw: object, ids: set[str]) -> Constraint:
    _require(isinstance(raw, dict), "matroid constraint must be an object")
    family = raw.get("matroid")
    if family == "partition":
        classes = raw.get("classes")
        _require(isinstance(classes, list) and classes, "partition matroid needs classes")
        seen: set[str] = set()
        parsed = []
        for cls in classes:
            _require(isinstance(cls, dict), "partition class must be an object")
            members = cls.get("items")
            quota = cls.get("quota")
            _require(isinstance(members, list) and members, "class needs items")
            _require(isinstance(quota, int) and not isinstance(quota, bool) and quota >= 0,
                     "class quota must be a non-negative integer")
            for m in members:
                _require(m in ids, f"class references unknown item {m!r}")
                _require(m not in seen, f"item {m!r} appears in two partition classes")
                seen.add(m)
            parsed.append((frozenset(members), quota))
        _require(seen == ids, "partition classes must cover the ground set")
        return PartitionMatroid(tuple(parsed))
    if family == "uniform":
        rank = raw.get("rank")
        _require(isinstance(rank, int) and not isinstance(rank, bool) and rank >= 0,
                 "uniform matroid needs an integer rank >= 0")
        return UniformMatroid(rank)
    if family == "explicit":
        _require(len(ids) <= 20, "explicit matroid family limited to 20 ground items")
        listed = raw.get("independent")
        _require(isinstance(listed, list), "explicit matroid needs an independent list")
        fam = set()
        for entry in listed:
            _require(isinstance(entry, list), "independent sets must be lists of ids")
            for m in entry:
                _require(m in ids, f"independent set references unknown item {m!r}")
            fam.add(frozenset(entry))
        _require(frozenset() in fam, "explicit family must contain the empty set")
        for s in fam:
            for drop in s:
                _require(s - {drop} in fam, "explicit family must be downward-closed")
        return ExplicitMatroid(frozenset(fam))
    raise InstanceError(f"unknown matroid family {family!r}")


def validate_instance(doc: object, name: str = "") -> Instance:
    """Validate a raw instance document and return the canonical Instance.

    Canonicalization sorts items by id and keeps agents in declaration
    order. Raises InstanceError with a diagnostic on any inconsistency.
    """
    _require(isinstance(doc, dict), "instance document must be a JSON object")
    fmt = doc.get("format", FORMAT_VERSION)
    _require(fmt == FORMAT_VERSION, f"unsupported format {fmt!r}")
    kind = doc.get("kind")
    _require(kind in KINDS, f"unknown kind {kind!r}")
    demand = doc.get("demand")
    _require(demand in DEMANDS, f"unknown demand {demand!r}")
    if kind == "gap":
        _require(demand == "unit", "gap instances are unit demand")

    raw_items = doc.get("items")
    _require(isinstance(raw_items, list), "items must be a list")

    machines: MachinePark | None = None
    raw_constraint = doc.get("constraint") or {}
    if kind == "gap":
        _require(isinstance(raw_constraint, dict), "constraint must be an object")
        raw_machines = raw_constraint.get("machines")
        _require(isinstance(raw_machines, list) and raw_machines, "gap needs machines")
        parsed_machines = []
        seen_mach: set[str] = set()
        for m in raw_machines:
            _require(isinstance(m, dict) and "id" in m, "machine entries need an id")
            mid = str(m["id"])
            _require(mid not in seen_mach, f"duplicate machine {mid!r}")
            seen_mach.add(mid)
            cap = parse_rational(m.get("capacity"), f"capacity of machine {mid}")
            _require(cap > 0, f"machine {mid!r} capacity must be positive")
            parsed_machines.append((mid, cap))
        machines = MachinePark(tuple(parsed_machines))

    items: list[Item] = []
    ids: set[str] = set()
    pair_keys: set[tuple[str, str]] = set()
    for raw in raw_items:
        _require(isinstance(raw, dict) and "id" in raw, "item entries need an id")
        item_id = str(raw["id"])
        _require(item_id not in ids, f"duplicate item id {item_id!r}")
        ids.add(item_id)
        value = parse_rational(raw.get("value", 0), f"value of {item_id}")
        _require(value >= 0, f"negative value on item {item_id!r}")
        capacity = None
        if raw.get("capacity") is not None:
            capacity = parse_rational(raw["capacity"], f"capacity of {item_id}")
            _require(capacity > 0, f"capacity of item {item_id!r} must be positive")
        if kind in ("knapsack", "gap"):
            _require(capacity is not None, f"item {item_id!r} needs a capacity")
        u = v = job = machine = None
        if kind == "matching":
            u, v = raw.get("u"), raw.get("v")
            _require(u is not None and v is not None, f"edge {item_id!r} needs endpoints u, v")
            u, v = str(u), str(v)
            _require(u != v, f"edge {item_id!r} endpoints must be distinct")
        if kind == "gap":
            job, machine = raw.get("job"), raw.get("machine")
            _require(job is not None and machine is not None,
                     f"pair {item_id!r} needs job and machine")
            job, machine = str(job), str(machine)
            assert machines is not None
            _require(machine in machines.capacity,
                     f"pair {item_id!r} references unknown machine {machine!r}")
            _require((job, machine) not in pair_keys,
                     f"duplicate pair for job {job!r} and machine {machine!r}")
            pair_keys.add((job, machine))
        items.append(Item(item_id, value, capacity, u, v, job, machine))
    items.sort(key=lambda it: it.id)

    raw_agents = doc.get("agents")
    _require(isinstance(raw_agents, list), "agents must be a list")
    agents: list[tuple[str, ...]] = []
    claimed: set[str] = set()
    item_map = {it.id: it for it in items}
    for idx, raw_set in enumerate(raw_agents):
        _require(isinstance(raw_set, list), f"agent {idx} holdings must be a list")
        held = sorted(str(i) for i in raw_set)
        for item_id in held:
            _require(item_id in ids, f"agent {idx} holds unknown item {item_id!r}")
            _require(item_id not in claimed,
                     f"agent sets are not disjoint: item {item_id!r} claimed twice")
            claimed.add(item_id)
        _require(len(set(held)) == len(held),
                 f"agent sets are not disjoint: agent {idx} repeats an item")
        agents.append(tuple(held))

    if kind == "gap":
        jobs_seen: set[str] = set()
        for idx, held in enumerate(agents):
            jobs = {item_map[i].job for i in held}
            _require(len(jobs) <= 1, f"agent {idx} holds pairs of two different jobs")
            if held:
                (job,) = jobs
                assert job is not None
                _require(job not in jobs_seen, f"two agents hold pairs of job {job!r}")
                jobs_seen.add(job)

    constraint: Constraint
    if kind == "matroid":
        constraint = _parse_matroid_constraint(raw_constraint, ids)
    elif kind == "knapsack":
        _require(isinstance(raw_constraint, dict), "constraint must be an object")
        cap = parse_rational(raw_constraint.get("capacity"), "knapsack capacity")
        _require(cap >= 0, "knapsack capacity must be non-negative")
        constraint = KnapsackBudget(cap)
    elif kind == "gap":
        constraint = machines
    else:
        constraint = None

    return Instance(kind, demand, tuple(items), tuple(agents), constraint, name=name)


def load_instance(path: str | Path) -> Instance:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: not valid JSON ({exc})") from exc
    return validate_instance(doc, name=path.stem)


def instance_to_doc(instance: Instance) -> dict:
    """Inverse of validate_instance, for writing instance files."""
    items = []
    for it in instance.items:
        entry: dict[str, object] = {"id": it.id, "value": format_rational(it.value)}
        if it.capacity is not None:
            entry["capacity"] = format_rational(it.capacity)
        if it.u is not None:
            entry["u"], entry["v"] = it.u, it.v
        if it.job is not None:
            entry["job"], entry["machine"] = it.job, it.machine
        items.append(entry)
    constraint: dict[str, object] = {}
    c = instance.constraint
    if isinstance(c, PartitionMatroid):
        constraint = {"matroid": "partition",
                      "classes": [{"items": sorted(m), "quota": q} for m, q in c.classes]}
    elif isinstance(c, UniformMatroid):
        constraint = {"matroid": "uniform", "rank": c.rank}
    elif isinstance(c, ExplicitMatroid):
        constraint = {"matroid": "explicit",
                      "independent": sorted([sorted(s) for s in c.independent])}
    elif isinstance(c, KnapsackBudget):
        constraint = {"capacity": format_rational(c.capacity)}
    elif isinstance(c, MachinePark):
        constraint = {"machines": [{"id": k, "capacity": format_rational(cap)}
                                   for k, cap in c.machines]}
    return {
        "format": FORMAT_VERSION,
        "kind": instance.kind,
        "demand": instance.demand,
        "items": items,
        "agents": [list(a) for a in instance.agents],
        "constraint": constraint,
    }


def is_independent(constraint: Constraint, selection: frozenset[str] | set[str]) -> bool:
    """Matroid independence test for the supported families."""
    if isinstance(constraint, PartitionMatroid):
        for members, quota in constraint.classes:
            if len(members & selection) > quota:
                return False
        return True
    if isinstance(constraint, UniformMatroid):
        return len(selection) <= constraint.rank
    if isinstance(constraint, ExplicitMatroid):
        return frozenset(selection) in constraint.independent
    raise InstanceError("not a matroid constraint")


def is_feasible(instance: Instance, selection: Iterable[str]) -> bool:
    """Does a set of item ids satisfy the instance's constraint and demand?"""
    chosen = frozenset(selection)
    for item_id in chosen:
        if item_id not in instance.item_by_id:
            raise InstanceError(f"unknown item id {item_id!r}")
    if instance.demand == "unit":
        per_agent: dict[int, int] = {}
        for item_id in chosen:
            owner = instance.agent_of.get(item_id)
            if owner is None:
                continue
            per_agent[owner] = per_agent.get(owner, 0) + 1
            if per_agent[owner] > 1:
                return False
    if instance.kind == "matroid":
        return is_independent(instance.constraint, chosen)
    if instance.kind == "matching":
        endpoints: set[str] = set()
        for item_id in chosen:
            it = instance.item_by_id[item_id]
            if it.u in endpoints or it.v in endpoints:
                return False
            endpoints.add(it.u)  # type: ignore[arg-type]
            endpoints.add(it.v)  # type: ignore[arg-type]
        return True
    if instance.kind == "knapsack":
        assert isinstance(instance.constraint, KnapsackBudget)
        used = sum((instance.item_by_id[i].capacity for i in chosen), Fraction(0))
        return used <= instance.constraint.capacity
    if instance.kind == "gap":
        assert isinstance(instance.constraint, MachinePark)
        jobs: set[str] = set()
        load: dict[str, Fraction] = {}
        for item_id in chosen:
            it = instance.item_by_id[item_id]
            if it.job in jobs:
                return False
            jobs.add(it.job)  # type: ignore[arg-type]
            load[it.machine] = load.get(it.machine, Fraction(0)) + it.capacity
        return all(load[k] <= instance.constraint.capacity[k] for k in load)
    raise InstanceError(f"unknown kind {instance.kind!r}")


def evaluate(
    instance: Instance, selections: Sequence[Iterable[str]]
) -> tuple[Fraction, tuple[Fraction, ...]]:
    """Exact total value and per-agent utilities of a feasible outcome."""
    sets = [frozenset(s) for s in selections]
    if len(sets) != instance.n_agents:
        raise InstanceError("one selection set per agent required")
    union: set[str] = set()
    for idx, sel in enumerate(sets):
        for item_id in sel:
            if item_id in union:
                raise InstanceError(f"item {item_id!r} selected for two agents")
            owner = instance.agent_of.get(item_id)
            if owner != idx:
                raise InstanceError(f"item {item_id!r} not held by agent {idx}")
        union |= sel
    if not is_feasible(instance, union):
        raise InstanceError("infeasible outcome rejected")
    utilities = tuple(
        sum((instance.item_by_id[i].value for i in sel), Fraction(0)) for sel in sets
    )
    return sum(utilities, Fraction(0)), utilities


def make_outcome(instance: Instance, bids: Bids, selections: Sequence[Iterable[str]]) -> Outcome:
    """Build an Outcome, enforcing the mechanism contract.

    Every mechanism funnels its result through here, so a selection outside
    the reported sets or an infeasible collection can never escape.
    """
    sets = tuple(frozenset(s) for s in selections)
    for idx, sel in enumerate(sets):
        if not sel <= bids[idx]:
            raise MechanismError(
                f"agent {idx} selection {sorted(sel)} exceeds its report"
            )
    try:
        total, utilities = evaluate(instance, sets)
    except InstanceError as exc:
        raise MechanismError(f"mechanism produced an infeasible outcome: {exc}") from exc
    return Outcome(sets, utilities, total)


def empty_outcome(instance: Instance, bids: Bids) -> Outcome:
    return make_outcome(instance, bids, [frozenset()] * instance.n_agents)


def check_bids(instance: Instance, bids: Bids) -> None:
    """Reports must be subsets of the true holdings (misreports hide items)."""
    if len(bids) != instance.n_agents:
        raise InstanceError("one bid set per agent required")
    for idx, bid in enumerate(bids):
        if not bid <= frozenset(instance.agents[idx]):
            raise InstanceError(f"agent {idx} reports items it does not hold")


def outcome_to_doc(instance: Instance, outcome: Outcome) -> dict:
    """JSON-able rendering of an outcome (selections, utilities, total)."""
    doc: dict[str, object] = {
        "selections": [sorted(sel) for sel in outcome.selections],
        "utilities": [format_rational(u) for u in outcome.utilities],
        "total_value": format_rational(outcome.total_value),
    }
    if instance.kind == "gap":
        assignment = {}
        for sel in outcome.selections:
            for item_id in sel:
                it = instance.item_by_id[item_id]
                assignment[it.job] = it.machine
        doc["assignment"] = dict(sorted(assignment.items()))
    return doc


def value_order_key(item: Item):
    """Canonical scan order: value descending, smaller capacity, then id."""
    cap = item.capacity if item.capacity is not None else Fraction(0)
    return (-item.value, cap, item.id)


def ratio_order_key(item: Item):
    """Density order: value/capacity descending, smaller capacity, then id."""
    return (-item.ratio, item.capacity, item.id)
