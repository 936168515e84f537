"""Knapsack-constrained stable matching between jobs and machines.

A market holds jobs, machines with capacity budgets, and compatible
(job, machine) pairs, each with a public value and capacity. Jobs rank
machines by value; machines rank jobs by value density (value/capacity) and
rank job *subsets* by a cancellation rule over densities. All ties break in
favor of the smaller capacity, then the fixed declaration order, so every
preference is strict.

Provided here:

  * ``sm_greedy``     -- proposals in decreasing value order, a machine
                         accepts while capacity remains; never revokes.
                         Truthful, but can be very inefficient.
  * ``sm_da_alg``     -- deferred acceptance: the unassigned job whose next
                         proposal has the highest density proposes; the
                         machine keeps the density-greedy feasible subset of
                         its current jobs plus the proposer; displaced jobs
                         return to the pool. Supports *virtual capacities*:
                         a tightened budget that must hold after removing the
                         machine's least preferred assigned job.
  * ``find_blocking_pair`` -- the stability verifier.

With all pair capacities at most C_k/lambda and virtual capacity
(lambda-1)/lambda * C_k the deferred acceptance output is stable and
order-independent; without virtual capacities it may not be.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

from .errors import InstanceError
from .instance import Bids, Instance, MachinePark

MarketBids = Mapping[str, frozenset[str]]


@dataclass(frozen=True)
class Pair:
    """A compatible (job, machine) pair with public value and capacity."""

    job: str
    machine: str
    value: Fraction
    capacity: Fraction
    item_id: str = ""

    @property
    def ratio(self) -> Fraction:
        return self.value / self.capacity


@dataclass(frozen=True)
class GapMarket:
    """Jobs, machines with capacities, and the compatible pair set."""

    jobs: tuple[str, ...]
    machines: tuple[str, ...]
    capacities: tuple[tuple[str, Fraction], ...]
    pairs: tuple[Pair, ...]

    @cached_property
    def machine_capacity(self) -> dict[str, Fraction]:
        return dict(self.capacities)

    @cached_property
    def pair_of(self) -> dict[tuple[str, str], Pair]:
        return {(p.job, p.machine): p for p in self.pairs}

    @cached_property
    def pairs_of_job(self) -> dict[str, tuple[Pair, ...]]:
        out: dict[str, list[Pair]] = {j: [] for j in self.jobs}
        for p in self.pairs:
            out[p.job].append(p)
        return {j: tuple(ps) for j, ps in out.items()}

    @cached_property
    def job_index(self) -> dict[str, int]:
        return {j: idx for idx, j in enumerate(self.jobs)}

    @cached_property
    def machine_index(self) -> dict[str, int]:
        return {k: idx for idx, k in enumerate(self.machines)}

    def truthful_bids(self) -> dict[str, frozenset[str]]:
        return {j: frozenset(p.machine for p in self.pairs_of_job[j]) for j in self.jobs}


def make_market(
    machines: Sequence[tuple[str, Fraction]],
    pairs: Iterable[tuple[str, str, Fraction, Fraction]],
    jobs: Sequence[str] | None = None,
) -> GapMarket:
    """Build and validate a market; job order defaults to first appearance."""
    caps = tuple((str(k), Fraction(c)) for k, c in machines)
    cap_map = dict(caps)
    if len(cap_map) != len(caps):
        raise InstanceError("duplicate machine")
    built: list[Pair] = []
    seen: set[tuple[str, str]] = set()
    order: list[str] = list(jobs) if jobs is not None else []
    for job, machine, value, capacity in pairs:
        job, machine = str(job), str(machine)
        if machine not in cap_map:
            raise InstanceError(f"pair references unknown machine {machine!r}")
        if (job, machine) in seen:
            raise InstanceError(f"duplicate pair ({job!r}, {machine!r})")
        seen.add((job, machine))
        value, capacity = Fraction(value), Fraction(capacity)
        if value < 0 or capacity <= 0:
            raise InstanceError(f"pair ({job!r}, {machine!r}) needs value >= 0, capacity > 0")
        built.append(Pair(job, machine, value, capacity, item_id=f"{job}:{machine}"))
        if jobs is None and job not in order:
            order.append(job)
    if jobs is not None and {p.job for p in built} - set(order):
        raise InstanceError("pair references a job missing from the job list")
    return GapMarket(tuple(order), tuple(k for k, _ in caps), caps, tuple(built))


def market_from_instance(instance: Instance) -> GapMarket:
    """View a gap-kind instance as a market; agent order gives the job order."""
    if instance.kind != "gap":
        raise InstanceError("market_from_instance needs a gap instance")
    park = instance.constraint
    assert isinstance(park, MachinePark)
    jobs: list[str] = []
    pairs: list[Pair] = []
    for held in instance.agents:
        if not held:
            continue
        job = instance.item_by_id[held[0]].job
        assert job is not None
        jobs.append(job)
        for item_id in held:
            it = instance.item_by_id[item_id]
            assert it.capacity is not None and it.machine is not None
            pairs.append(Pair(job, it.machine, it.value, it.capacity, item_id=item_id))
    return GapMarket(tuple(jobs), park.order, park.machines, tuple(pairs))


def market_bids_from_instance(instance: Instance, bids: Bids) -> dict[str, frozenset[str]]:
    """Translate per-agent item-id reports into per-job machine reports."""
    out: dict[str, frozenset[str]] = {}
    for idx, held in enumerate(instance.agents):
        if not held:
            continue
        job = instance.item_by_id[held[0]].job
        assert job is not None
        out[job] = frozenset(
            instance.item_by_id[i].machine for i in bids[idx]  # type: ignore[misc]
        )
    return out


def check_market_bids(market: GapMarket, bids: MarketBids) -> dict[str, frozenset[str]]:
    normalized: dict[str, frozenset[str]] = {}
    for job in market.jobs:
        reported = frozenset(bids.get(job, frozenset()))
        for k in reported:
            if (job, k) not in market.pair_of:
                raise InstanceError(f"job {job!r} reports unknown pair with {k!r}")
        normalized[job] = reported
    return normalized


def job_pref_key(pair: Pair):
    """Job-side ranking: value desc, smaller capacity, machine order last."""
    return (-pair.value, pair.capacity, pair.machine)


def machine_pref_key(pair: Pair):
    """Machine-side ranking: density desc, smaller capacity, job order last."""
    return (-pair.ratio, pair.capacity, pair.job)


def value_scan_key(pair: Pair):
    return (-pair.value, pair.capacity, pair.job, pair.machine)


def ratio_scan_key(pair: Pair):
    return (-pair.ratio, pair.capacity, pair.job, pair.machine)


@dataclass(frozen=True)
class PreferenceLists:
    """Strict preference lists over the reported pairs only."""

    job_lists: dict[str, tuple[str, ...]]  # job -> machines, best first
    machine_lists: dict[str, tuple[str, ...]]  # machine -> jobs, best first


def build_preferences(market: GapMarket, bids: MarketBids) -> PreferenceLists:
    bids = check_market_bids(market, bids)
    job_lists: dict[str, tuple[str, ...]] = {}
    per_machine: dict[str, list[Pair]] = {k: [] for k in market.machines}
    for job in market.jobs:
        reported = [market.pair_of[(job, k)] for k in bids[job]]
        job_lists[job] = tuple(p.machine for p in sorted(reported, key=job_pref_key))
        for p in reported:
            per_machine[p.machine].append(p)
    machine_lists = {
        k: tuple(p.job for p in sorted(ps, key=machine_pref_key))
        for k, ps in per_machine.items()
    }
    return PreferenceLists(job_lists, machine_lists)


def compare_subsets(
    market: GapMarket, machine: str, first: Iterable[str], second: Iterable[str]
) -> int:
    """Machine preference between two job sets: +1 first, -1 second, 0 tie.

    Sets above the capacity budget rank below every feasible set. Otherwise
    drop common jobs, cancel cross pairs of equal density, and prefer the
    side holding the best remaining job; nothing left means equivalence.
    """
    cap = market.machine_capacity[machine]
    a, b = frozenset(first), frozenset(second)

    def load(jobs: frozenset[str]) -> Fraction:
        return sum((market.pair_of[(j, machine)].capacity for j in jobs), Fraction(0))

    feasible_a, feasible_b = load(a) <= cap, load(b) <= cap
    if feasible_a != feasible_b:
        return 1 if feasible_a else -1
    if not feasible_a:
        return 0
    ratios_a = Counter(market.pair_of[(j, machine)].ratio for j in a - b)
    ratios_b = Counter(market.pair_of[(j, machine)].ratio for j in b - a)
    common = ratios_a & ratios_b
    ratios_a -= common
    ratios_b -= common
    if not ratios_a and not ratios_b:
        return 0
    if not ratios_a:
        return -1
    if not ratios_b:
        return 1
    return 1 if max(ratios_a) > max(ratios_b) else -1


@dataclass(frozen=True)
class GapAssignment:
    """A job-to-machine map with exact value/load accounting.

    ``on_machine`` keeps each machine's jobs in its preference order;
    ``proposal_count`` records how many proposals a deferred-acceptance run
    made (zero for greedy outputs).
    """

    machine_of: dict[str, str]
    on_machine: dict[str, tuple[str, ...]]
    job_value: dict[str, Fraction]
    machine_value: dict[str, Fraction]
    machine_load: dict[str, Fraction]
    total_value: Fraction
    proposal_count: int = 0

    def value_of(self, job: str) -> Fraction:
        return self.job_value.get(job, Fraction(0))

    def jobs_on(self, machine: str) -> tuple[str, ...]:
        return self.on_machine.get(machine, ())

    def pairs(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted(self.machine_of.items()))


def assignment_from_map(
    market: GapMarket, assigned: Mapping[str, str], proposals: int = 0
) -> GapAssignment:
    on_machine: dict[str, list[str]] = {k: [] for k in market.machines}
    job_value: dict[str, Fraction] = {}
    machine_value: dict[str, Fraction] = {k: Fraction(0) for k in market.machines}
    machine_load: dict[str, Fraction] = {k: Fraction(0) for k in market.machines}
    for job, k in assigned.items():
        pair = market.pair_of[(job, k)]
        on_machine[k].append(job)
        job_value[job] = pair.value
        machine_value[k] += pair.value
        machine_load[k] += pair.capacity
    for k in market.machines:
        on_machine[k].sort(key=lambda j: machine_pref_key(market.pair_of[(j, k)]))
        if machine_load[k] > market.machine_capacity[k]:
            raise InstanceError(f"machine {k!r} over capacity")
    return GapAssignment(
        machine_of=dict(assigned),
        on_machine={k: tuple(v) for k, v in on_machine.items()},
        job_value=job_value,
        machine_value=machine_value,
        machine_load=machine_load,
        total_value=sum(machine_value.values(), Fraction(0)),
        proposal_count=proposals,
    )


def sm_greedy(
    market: GapMarket, bids: MarketBids, job_quota: int | None = None
) -> GapAssignment:
    """Value-order proposals; a machine accepts while capacity (and, if set,
    its job quota) remains. Assignments are never revoked. Truthful."""
    bids = check_market_bids(market, bids)
    reported = sorted(
        (market.pair_of[(j, k)] for j in market.jobs for k in bids[j]),
        key=value_scan_key,
    )
    assigned: dict[str, str] = {}
    load: dict[str, Fraction] = {k: Fraction(0) for k in market.machines}
    count: dict[str, int] = {k: 0 for k in market.machines}
    for p in reported:
        if p.job in assigned:
            continue
        if load[p.machine] + p.capacity > market.machine_capacity[p.machine]:
            continue
        if job_quota is not None and count[p.machine] >= job_quota:
            continue
        assigned[p.job] = p.machine
        load[p.machine] += p.capacity
        count[p.machine] += 1
    return assignment_from_map(market, assigned)


def greedy_rebuild(
    market: GapMarket,
    machine: str,
    candidates: Iterable[str],
    virtual_caps: Mapping[str, Fraction] | None = None,
) -> tuple[str, ...]:
    """Density-greedy feasible subset of ``candidates`` in preference order.

    A job is added only if the set so far fits the virtual capacity (when
    one is supplied) and adding the job keeps the true capacity budget, so
    removing the least preferred kept job always restores the virtual bound.
    """
    cap = market.machine_capacity[machine]
    virtual = None if virtual_caps is None else virtual_caps[machine]
    kept: list[str] = []
    load = Fraction(0)
    for job in sorted(candidates, key=lambda j: machine_pref_key(market.pair_of[(j, machine)])):
        c = market.pair_of[(job, machine)].capacity
        if load + c > cap:
            continue
        if virtual is not None and load > virtual:
            continue
        kept.append(job)
        load += c
    return tuple(kept)


def sm_da_alg(
    market: GapMarket,
    bids: MarketBids,
    virtual_caps: Mapping[str, Fraction] | None = None,
    choose_proposal: Callable[[list[Pair]], Pair] | None = None,
) -> GapAssignment:
    """Deferred acceptance with density-greedy machine-side selection.

    Each round, among the unassigned jobs' next proposals the pair with the
    highest density proposes (``choose_proposal`` overrides this for
    order-independence experiments). The machine re-selects greedily from its
    current jobs plus the proposer; displaced jobs return to the pool with
    their proposal history intact, so each pair proposes at most once and the
    algorithm terminates.
    """
    bids = check_market_bids(market, bids)
    job_lists = {
        j: tuple(
            p.machine
            for p in sorted((market.pair_of[(j, k)] for k in bids[j]), key=job_pref_key)
        )
        for j in market.jobs
    }
    next_idx = {j: 0 for j in market.jobs}
    assigned: dict[str, str] = {}
    on_machine: dict[str, set[str]] = {k: set() for k in market.machines}
    proposals = 0
    while True:
        candidates = []
        for j in market.jobs:
            if j in assigned or next_idx[j] >= len(job_lists[j]):
                continue
            candidates.append(market.pair_of[(j, job_lists[j][next_idx[j]])])
        if not candidates:
            break
        pick = (
            choose_proposal(candidates)
            if choose_proposal is not None
            else min(candidates, key=ratio_scan_key)
        )
        next_idx[pick.job] += 1
        proposals += 1
        k = pick.machine
        pool = on_machine[k] | {pick.job}
        kept = greedy_rebuild(market, k, pool, virtual_caps)
        if pick.job in kept:
            for displaced in pool - set(kept):
                del assigned[displaced]
            on_machine[k] = set(kept)
            assigned[pick.job] = k
        # otherwise the machine keeps its jobs and the proposer stays free
    return assignment_from_map(market, assigned, proposals=proposals)


def virtual_capacities(market: GapMarket, lam: int) -> dict[str, Fraction]:
    """The tightened budgets (lambda-1)/lambda * C_k."""
    if lam < 2:
        raise InstanceError("lambda must be at least 2")
    return {
        k: Fraction(lam - 1, lam) * cap for k, cap in market.machine_capacity.items()
    }


@dataclass(frozen=True)
class BlockingPair:
    job: str
    machine: str
    better_subset: tuple[str, ...]


def find_blocking_pair(
    market: GapMarket,
    bids: MarketBids,
    assignment: GapAssignment,
    virtual_caps: Mapping[str, Fraction] | None = None,
) -> BlockingPair | None:
    """First (job, machine) pair destabilizing the assignment, if any.

    A pair blocks when the job strictly prefers the machine to its current
    assignment and the machine's greedy rebuild over its jobs plus the
    candidate strictly beats its current set. Returns None when stable.
    """
    bids = check_market_bids(market, bids)
    reported = sorted(
        (market.pair_of[(j, k)] for j in market.jobs for k in bids[j]),
        key=lambda p: (market.job_index[p.job], market.machine_index[p.machine]),
    )
    for p in reported:
        current = assignment.machine_of.get(p.job)
        if current is not None:
            if job_pref_key(p) >= job_pref_key(market.pair_of[(p.job, current)]):
                continue
        rebuilt = greedy_rebuild(
            market, p.machine, set(assignment.jobs_on(p.machine)) | {p.job}, virtual_caps
        )
        if compare_subsets(market, p.machine, rebuilt, assignment.jobs_on(p.machine)) > 0:
            return BlockingPair(p.job, p.machine, rebuilt)
    return None
