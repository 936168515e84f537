"""Assignment-market mechanisms layered on the stable matching algorithms.

The deterministic pieces split pairs by size against each machine's budget:

  * ``gap_mech_1`` keeps only large pairs (capacity >= C_k/lambda) and runs
    the greedy stable matcher with one job per machine,
  * ``gap_mech_2`` keeps only small pairs (capacity <= C_k/lambda) and runs
    it with at most lambda jobs per machine.

``gap_mech_3`` samples each job into a test group with a fair coin, runs
deferred acceptance with virtual capacities on the test group, converts each
machine's test value into a density threshold t_k = mu * v_k / C_k, and then
serves the remaining jobs online: each gets its best machine that still has
room and whose threshold its density meets. Test jobs win nothing, which is
what makes the whole construction truthful.

``gap_main`` mixes the three uniformly. ``reference_astar`` runs the
virtual-capacity deferred acceptance on *all* jobs; it is consumed by the
property suites that compare the sampled and full stable assignments.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import InstanceError
from .rationals import format_rational
from .stable import (
    GapAssignment,
    GapMarket,
    MarketBids,
    assignment_from_map,
    check_market_bids,
    sm_da_alg,
    sm_greedy,
    virtual_capacities,
)
from .tape import Tape

DEFAULT_GAP_LAMBDA = 3
DEFAULT_GAP_MU = Fraction(1, 6)


@dataclass(frozen=True)
class Gap3Config:
    """Parameters of the sampled mechanism: integer lam > 2 and mu > 0 with
    mu * lam / (lam - 1) < 1/3 (keeps the online stage's slack positive)."""

    lam: int = DEFAULT_GAP_LAMBDA
    mu: Fraction = DEFAULT_GAP_MU

    def __post_init__(self) -> None:
        if not isinstance(self.lam, int) or self.lam <= 2:
            raise InstanceError("gap lambda must be an integer > 2")
        mu = self.mu
        if not isinstance(mu, Fraction) or mu <= 0:
            raise InstanceError("gap mu must be a positive rational")
        if mu * Fraction(self.lam, self.lam - 1) >= Fraction(1, 3):
            raise InstanceError(
                f"mu too large: need mu*lam/(lam-1) < 1/3, got {format_rational(mu)}"
            )


@dataclass(frozen=True)
class Gap3Trace:
    """Everything gap_mech_3 computed on the way to its final assignment."""

    sample: frozenset[str]  # test jobs T
    rest: tuple[str, ...]  # remaining jobs in canonical order
    test_assignment: GapAssignment
    thresholds: dict[str, Fraction]
    final: GapAssignment


def _filter_small(market: GapMarket, bids: MarketBids, lam: int) -> dict[str, frozenset[str]]:
    """Keep reported pairs with capacity <= C_k/lambda (boundary stays)."""
    bids = check_market_bids(market, bids)
    return {
        j: frozenset(
            k
            for k in reported
            if market.pair_of[(j, k)].capacity <= market.machine_capacity[k] / lam
        )
        for j, reported in bids.items()
    }


def _filter_large(market: GapMarket, bids: MarketBids, lam: int) -> dict[str, frozenset[str]]:
    """Keep reported pairs with capacity >= C_k/lambda (boundary stays)."""
    bids = check_market_bids(market, bids)
    return {
        j: frozenset(
            k
            for k in reported
            if market.pair_of[(j, k)].capacity >= market.machine_capacity[k] / lam
        )
        for j, reported in bids.items()
    }


def gap_special_mix(market: GapMarket, bids: MarketBids, tape: Tape) -> GapAssignment:
    """Fair coin between sm_greedy and plain deferred acceptance.

    On markets where values or capacities are invariant per job or per
    machine this mix is truthful and a 4-approximation.
    """
    if tape.bit(("mech",), Fraction(1, 2)):
        return sm_da_alg(market, bids)
    return sm_greedy(market, bids)


def gap_mech_1(market: GapMarket, bids: MarketBids, lam: int) -> GapAssignment:
    """Large pairs only, one job per machine, greedy. Truthful."""
    if lam < 2:
        raise InstanceError("lambda must be at least 2")
    return sm_greedy(market, _filter_large(market, bids, lam), job_quota=1)


def gap_mech_2(market: GapMarket, bids: MarketBids, lam: int) -> GapAssignment:
    """Small pairs only, at most lambda jobs per machine, greedy. Truthful."""
    if lam < 2:
        raise InstanceError("lambda must be at least 2")
    return sm_greedy(market, _filter_small(market, bids, lam), job_quota=lam)


def gap_mech_3(
    market: GapMarket, bids: MarketBids, cfg: Gap3Config, tape: Tape
) -> tuple[GapAssignment, Gap3Trace]:
    """Sampled thresholds plus an online assignment stage. Returns the final
    assignment together with the full trace (sample, test assignment,
    thresholds) for auditing."""
    small = _filter_small(market, bids, cfg.lam)
    sample = frozenset(
        j for idx, j in enumerate(market.jobs) if tape.bit(("sample", idx), Fraction(1, 2))
    )
    rest = tuple(j for j in market.jobs if j not in sample)
    test_bids = {j: (small[j] if j in sample else frozenset()) for j in market.jobs}
    test = sm_da_alg(market, test_bids, virtual_caps=virtual_capacities(market, cfg.lam))
    thresholds = {
        k: cfg.mu * test.machine_value[k] / market.machine_capacity[k]
        for k in market.machines
    }
    assigned: dict[str, str] = {}
    load: dict[str, Fraction] = {k: Fraction(0) for k in market.machines}
    for job in rest:
        options = []
        for k in small[job]:
            pair = market.pair_of[(job, k)]
            if load[k] + pair.capacity > market.machine_capacity[k]:
                continue
            if pair.ratio < thresholds[k]:
                continue
            options.append(pair)
        if not options:
            continue
        pick = min(options, key=lambda p: (-p.value, p.capacity, p.machine))
        assigned[job] = pick.machine
        load[pick.machine] += pick.capacity
    final = assignment_from_map(market, assigned)
    _check_threshold_discipline(market, cfg, thresholds, final)
    trace = Gap3Trace(sample, rest, test, thresholds, final)
    return final, trace


def _check_threshold_discipline(
    market: GapMarket,
    cfg: Gap3Config,
    thresholds: Mapping[str, Fraction],
    final: GapAssignment,
) -> None:
    """Every assigned pair is small and meets its machine threshold."""
    for job, k in final.machine_of.items():
        pair = market.pair_of[(job, k)]
        if pair.ratio < thresholds[k] or pair.capacity > market.machine_capacity[k] / cfg.lam:
            raise InstanceError(
                f"threshold discipline violated on pair ({job!r}, {k!r})"
            )


def gap_main(
    market: GapMarket, bids: MarketBids, cfg: Gap3Config, tape: Tape
) -> GapAssignment:
    """Uniform mix of the three mechanisms. Truthful per realization."""
    arm = tape.choice(("mech",), 3)
    if arm == 0:
        return gap_mech_1(market, bids, cfg.lam)
    if arm == 1:
        return gap_mech_2(market, bids, cfg.lam)
    final, _ = gap_mech_3(market, bids, cfg, tape)
    return final


def reference_astar(market: GapMarket, bids: MarketBids, lam: int) -> GapAssignment:
    """Virtual-capacity deferred acceptance over all jobs and small pairs.

    An analysis artifact: stable, and the yardstick the property suites
    compare sampled assignments against.
    """
    if lam <= 2:
        raise InstanceError("lambda must be an integer > 2")
    return sm_da_alg(
        market, _filter_small(market, bids, lam), virtual_caps=virtual_capacities(market, lam)
    )


def tilde_astar_values(market: GapMarket, astar: GapAssignment, lam: int) -> Fraction:
    """Total value of the restriction keeping each machine's top-lambda jobs
    by value from the given assignment."""
    total = Fraction(0)
    for k in market.machines:
        values = sorted(
            (market.pair_of[(j, k)].value for j in astar.jobs_on(k)), reverse=True
        )
        total += sum(values[:lam], Fraction(0))
    return total
