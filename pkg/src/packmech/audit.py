"""Truthfulness auditors and the sampling concentration check.

``audit_truthfulness`` enumerates, for every agent, every proper subset of
its true holdings as a misreport (hiding items is the only deviation the
model admits) and compares utilities exactly:

  * universal mode: the truthful run's randomness is enumerated into fixed
    tapes; each misreport is replayed against the *same* tape, draws paired
    by label, so truth must win pointwise on every realization;
  * expectation mode: truthful and deviating runs are branch-enumerated
    independently and their exact expected utilities compared.

A violation is returned as a witness (agent, misreport, tape, utilities) that
can be re-verified by re-running the mechanism. ``check_sampling_lemma``
computes the exact probability that a fair independent subsample of a value
list lands strictly between one third and two thirds of the total.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import LemmaInapplicable, SizeGateError, TapeError
from .instance import Bids, Instance, Outcome
from .rationals import format_rational
from .tape import Branch, Draw, FixedTape, Tape, enumerate_branches, transcript_to_doc

Runner = Callable[[Instance, Bids, Tape], Outcome]

AGENT_ITEM_GATE = 10
BRANCH_GATE = 10**6


@dataclass(frozen=True)
class Witness:
    agent: int
    misreport: frozenset[str]
    tape: tuple[Draw, ...] | None  # fixed tape of the violated realization
    utility_truth: Fraction
    utility_misreport: Fraction


@dataclass(frozen=True)
class AuditReport:
    mechanism: str
    instance: str
    mode: str  # "universal" | "expectation"
    verdict: str  # "truthful" | "manipulable"
    deviations_checked: int
    branch_count: int
    truth_branches: tuple[tuple[Fraction, tuple[Fraction, ...]], ...]
    witness: Witness | None = None

    @property
    def truthful(self) -> bool:
        return self.verdict == "truthful"


def proper_subsets(full: frozenset[str]) -> Iterable[frozenset[str]]:
    """Every subset except the set itself, the empty report included."""
    items = sorted(full)
    for size in range(len(items)):
        for combo in itertools.combinations(items, size):
            yield frozenset(combo)


def _misreport_count(instance: Instance) -> int:
    return sum(2 ** len(held) - 1 for held in instance.agents)


def _with_report(bids: Bids, agent: int, report: frozenset[str]) -> Bids:
    return tuple(report if idx == agent else b for idx, b in enumerate(bids))


def _expected_utilities(branches: Sequence[Branch], n_agents: int) -> list[Fraction]:
    out = [Fraction(0)] * n_agents
    for br in branches:
        outcome = br.result
        assert isinstance(outcome, Outcome)
        for idx in range(n_agents):
            out[idx] += br.probability * outcome.utilities[idx]
    return out


def audit_truthfulness(
    runner: Runner,
    instance: Instance,
    mode: str,
    mechanism_name: str = "",
    max_items_per_agent: int = AGENT_ITEM_GATE,
    max_branches: int = BRANCH_GATE,
) -> AuditReport:
    """Exhaustive misreport audit of a mechanism on one instance.

    Stops at the first violation and returns it as the witness; otherwise
    certifies the full deviation space it enumerated.
    """
    if mode not in ("universal", "expectation"):
        raise ValueError(f"unknown audit mode {mode!r}")
    for idx, held in enumerate(instance.agents):
        if len(held) > max_items_per_agent:
            raise SizeGateError(
                f"agent {idx} holds {len(held)} items, gate is {max_items_per_agent}"
            )
    truth = instance.truthful_bids()
    truth_branches = enumerate_branches(
        lambda tape: runner(instance, truth, tape), max_branches
    )
    branch_count = len(truth_branches)
    report_branches = tuple(
        (br.probability, br.result.utilities) for br in truth_branches  # type: ignore[union-attr]
    )
    deviations = 0
    witness: Witness | None = None

    if mode == "universal":
        for agent, held in enumerate(instance.agents):
            for misreport in proper_subsets(frozenset(held)):
                lie = _with_report(truth, agent, misreport)
                for br in truth_branches:
                    deviations += 1
                    try:
                        outcome = runner(instance, lie, FixedTape(br.transcript))
                    except TapeError as exc:
                        raise TapeError(
                            f"{exc}; the mechanism's draw structure depends on the "
                            "bids, so the universal audit cannot pair tapes -- "
                            "audit it in expectation mode"
                        ) from exc
                    truthful_outcome = br.result
                    assert isinstance(truthful_outcome, Outcome)
                    if outcome.utilities[agent] > truthful_outcome.utilities[agent]:
                        witness = Witness(
                            agent,
                            misreport,
                            br.transcript,
                            truthful_outcome.utilities[agent],
                            outcome.utilities[agent],
                        )
                        break
                if witness:
                    break
            if witness:
                break
    else:
        truth_expected = _expected_utilities(truth_branches, instance.n_agents)
        for agent, held in enumerate(instance.agents):
            for misreport in proper_subsets(frozenset(held)):
                deviations += 1
                lie = _with_report(truth, agent, misreport)
                lie_branches = enumerate_branches(
                    lambda tape: runner(instance, lie, tape), max_branches
                )
                branch_count += len(lie_branches)
                lie_expected = _expected_utilities(lie_branches, instance.n_agents)
                if lie_expected[agent] > truth_expected[agent]:
                    witness = Witness(
                        agent, misreport, None, truth_expected[agent], lie_expected[agent]
                    )
                    break
            if witness:
                break

    return AuditReport(
        mechanism=mechanism_name,
        instance=instance.name,
        mode=mode,
        verdict="manipulable" if witness else "truthful",
        deviations_checked=deviations,
        branch_count=branch_count,
        truth_branches=report_branches,
        witness=witness,
    )


def verify_witness(report: AuditReport, runner: Runner, instance: Instance) -> bool:
    """Re-run the mechanism on the witness and reproduce the utility gap."""
    w = report.witness
    if w is None:
        return False
    truth = instance.truthful_bids()
    lie = _with_report(truth, w.agent, w.misreport)
    if report.mode == "universal":
        assert w.tape is not None
        truthful = runner(instance, truth, FixedTape(w.tape))
        lying = runner(instance, lie, FixedTape(w.tape))
        return (
            truthful.utilities[w.agent] == w.utility_truth
            and lying.utilities[w.agent] == w.utility_misreport
        )
    truth_branches = enumerate_branches(lambda tape: runner(instance, truth, tape))
    lie_branches = enumerate_branches(lambda tape: runner(instance, lie, tape))
    return (
        _expected_utilities(truth_branches, instance.n_agents)[w.agent] == w.utility_truth
        and _expected_utilities(lie_branches, instance.n_agents)[w.agent]
        == w.utility_misreport
    )


def report_to_doc(report: AuditReport) -> dict:
    doc: dict[str, object] = {
        "mechanism": report.mechanism,
        "instance": report.instance,
        "mode": report.mode,
        "verdict": report.verdict,
        "deviations_checked": report.deviations_checked,
        "branch_count": report.branch_count,
        "truth_branches": [
            {
                "probability": format_rational(p),
                "utilities": [format_rational(u) for u in utilities],
            }
            for p, utilities in report.truth_branches
        ],
    }
    if report.witness is not None:
        w = report.witness
        doc["witness"] = {
            "agent": w.agent,
            "misreport": sorted(w.misreport),
            "tape": None if w.tape is None else transcript_to_doc(w.tape),
            "utility_truth": format_rational(w.utility_truth),
            "utility_misreport": format_rational(w.utility_misreport),
        }
    return doc


SAMPLING_DELTA_CAP = Fraction(1, 36)
DISTRIBUTION_GATE = 4 * 10**6


def check_sampling_lemma(
    values: Sequence[Fraction], delta1: Fraction = SAMPLING_DELTA_CAP
) -> tuple[Fraction, bool]:
    """Exact P(a/3 < b < 2a/3) for a fair independent subsample.

    ``values`` are non-negative; ``a`` is their total and ``b`` the random
    subsample total. Applicable only when the largest value is below
    delta1 * a with 0 < delta1 <= 1/36; then the probability is at least 3/4
    and the returned verdict says whether that bound holds.

    The distribution of b is built by exact convolution over partial-sum
    multiplicities, which collapses repeated values (a list of equal values
    becomes a binomial in a handful of entries).
    """
    vals = sorted((Fraction(v) for v in values), reverse=True)
    if any(v < 0 for v in vals):
        raise LemmaInapplicable("values must be non-negative")
    if not isinstance(delta1, Fraction) or not 0 < delta1 <= SAMPLING_DELTA_CAP:
        raise LemmaInapplicable("delta1 must satisfy 0 < delta1 <= 1/36")
    total = sum(vals, Fraction(0))
    if not vals or vals[0] >= delta1 * total:
        raise LemmaInapplicable("lemma inapplicable: largest value >= delta1 * total")
    dist: dict[Fraction, Fraction] = {Fraction(0): Fraction(1)}
    half = Fraction(1, 2)
    for v in vals:
        nxt: dict[Fraction, Fraction] = {}
        for s, p in dist.items():
            contribution = p * half
            nxt[s] = nxt.get(s, Fraction(0)) + contribution
            nxt[s + v] = nxt.get(s + v, Fraction(0)) + contribution
        dist = nxt
        if len(dist) > DISTRIBUTION_GATE:
            raise SizeGateError("sampling-lemma distribution exceeds the size gate")
    low, high = total / 3, 2 * total / 3
    probability = sum((p for s, p in dist.items() if low < s < high), Fraction(0))
    return probability, probability >= Fraction(3, 4)
