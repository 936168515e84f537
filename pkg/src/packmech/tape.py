"""Random tapes: explicit, replayable, exactly enumerable randomness.

A mechanism never calls a RNG directly. It asks its tape for labeled draws:

  * ``bit(label, p)``    -- Bernoulli with exact rational success probability,
  * ``choice(label, n)`` -- uniform index in 0..n-1.

Labels identify a draw by its role (e.g. ``("sample", 2)`` for agent 2's
sampling coin), so a fixed tape can be replayed against a different bid
profile and still hand the same coin to the same agent. Three tape flavors:

  * SeededTape      -- draws from a seeded PRNG, records a transcript,
  * FixedTape       -- replays a transcript by label (every requested draw
                       must be present and must match its parameters),
  * branch enumeration -- ``enumerate_branches`` runs a mechanism once per
    realizable draw path and returns every branch with its exact probability,
    which is how all expectations in this package are computed. No sampling.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence, TypeVar

from .errors import SizeGateError, TapeError
from .rationals import format_rational, parse_rational

Label = tuple
T = TypeVar("T")


@dataclass(frozen=True)
class Draw:
    kind: str  # "bit" | "choice"
    label: Label
    param: Fraction | int  # success probability p, or branch count n
    value: bool | int


class Tape:
    """Base tape: validates requests and records the transcript."""

    def __init__(self) -> None:
        self.transcript: list[Draw] = []
        self._seen: set[Label] = set()

    def bit(self, label: Label, p: Fraction) -> bool:
        if not 0 <= p <= 1:
            raise TapeError(f"bit probability out of range: {p}")
        self._claim(label)
        value = self._draw_bit(label, p)
        self.transcript.append(Draw("bit", label, p, value))
        return value

    def choice(self, label: Label, n: int) -> int:
        if n < 1:
            raise TapeError(f"choice needs at least one branch, got {n}")
        self._claim(label)
        value = self._draw_choice(label, n)
        self.transcript.append(Draw("choice", label, n, value))
        return value

    def _claim(self, label: Label) -> None:
        if label in self._seen:
            raise TapeError(f"draw label requested twice: {label!r}")
        self._seen.add(label)

    def _draw_bit(self, label: Label, p: Fraction) -> bool:
        raise NotImplementedError

    def _draw_choice(self, label: Label, n: int) -> int:
        raise NotImplementedError


class SeededTape(Tape):
    """Fresh randomness from a seed; exact-p Bernoulli via integer draws."""

    def __init__(self, seed: int) -> None:
        super().__init__()
        self._rng = random.Random(seed)

    def _draw_bit(self, label: Label, p: Fraction) -> bool:
        return self._rng.randrange(p.denominator) < p.numerator

    def _draw_choice(self, label: Label, n: int) -> int:
        return self._rng.randrange(n)


class FixedTape(Tape):
    """Replay of a recorded transcript, keyed by draw label."""

    def __init__(self, draws: Iterable[Draw]) -> None:
        super().__init__()
        self._by_label: dict[Label, Draw] = {}
        for d in draws:
            if d.label in self._by_label:
                raise TapeError(f"transcript repeats label {d.label!r}")
            self._by_label[d.label] = d

    def _lookup(self, label: Label, kind: str, param: Fraction | int) -> Draw:
        draw = self._by_label.get(label)
        if draw is None:
            raise TapeError(f"fixed tape has no draw for label {label!r}")
        if draw.kind != kind or draw.param != param:
            raise TapeError(
                f"tape mismatch at {label!r}: recorded {draw.kind}({draw.param}), "
                f"requested {kind}({param})"
            )
        return draw

    def _draw_bit(self, label: Label, p: Fraction) -> bool:
        return bool(self._lookup(label, "bit", p).value)

    def _draw_choice(self, label: Label, n: int) -> int:
        return int(self._lookup(label, "choice", n).value)


class _NeedDraw(Exception):
    def __init__(self, kind: str, param: Fraction | int):
        self.kind = kind
        self.param = param


class _ScriptTape(Tape):
    """Replays a positional outcome script; signals when it runs out."""

    def __init__(self, script: Sequence[bool | int]) -> None:
        super().__init__()
        self._script = script
        self._pos = 0

    def _next(self, kind: str, param: Fraction | int) -> bool | int:
        if self._pos >= len(self._script):
            raise _NeedDraw(kind, param)
        value = self._script[self._pos]
        self._pos += 1
        return value

    def _draw_bit(self, label: Label, p: Fraction) -> bool:
        return bool(self._next("bit", p))

    def _draw_choice(self, label: Label, n: int) -> int:
        return int(self._next("choice", n))


@dataclass(frozen=True)
class Branch:
    """One realizable draw path: its probability, transcript, and result."""

    probability: Fraction
    transcript: tuple[Draw, ...]
    result: object


def branch_probability(transcript: Iterable[Draw]) -> Fraction:
    prob = Fraction(1)
    for d in transcript:
        if d.kind == "bit":
            assert isinstance(d.param, Fraction)
            prob *= d.param if d.value else 1 - d.param
        else:
            prob *= Fraction(1, int(d.param))
    return prob


def enumerate_branches(run: Callable[[Tape], T], max_branches: int = 10**6) -> list[Branch]:
    """Run a mechanism on every realizable draw path.

    Returns one Branch per leaf of the decision tree with its exact
    probability; probabilities sum to 1. Deterministic mechanisms yield a
    single branch. Raises SizeGateError beyond ``max_branches`` leaves.
    """
    branches: list[Branch] = []
    stack: list[tuple[bool | int, ...]] = [()]
    while stack:
        script = stack.pop()
        tape = _ScriptTape(script)
        try:
            result = run(tape)
        except _NeedDraw as need:
            if need.kind == "bit":
                p = need.param
                assert isinstance(p, Fraction)
                if p > 0:
                    stack.append(script + (True,))
                if p < 1:
                    stack.append(script + (False,))
            else:
                for j in range(int(need.param) - 1, -1, -1):
                    stack.append(script + (j,))
            continue
        if tape._pos != len(script):
            raise TapeError("mechanism consumed fewer draws than enumerated")
        branches.append(Branch(branch_probability(tape.transcript), tuple(tape.transcript), result))
        if len(branches) > max_branches:
            raise SizeGateError(f"branch enumeration exceeds {max_branches} leaves")
    return branches


def transcript_to_doc(transcript: Iterable[Draw]) -> list[dict]:
    out = []
    for d in transcript:
        entry: dict[str, object] = {"kind": d.kind, "label": list(d.label)}
        if d.kind == "bit":
            assert isinstance(d.param, Fraction)
            entry["p"] = format_rational(d.param)
            entry["value"] = bool(d.value)
        else:
            entry["n"] = int(d.param)
            entry["value"] = int(d.value)
        out.append(entry)
    return out


def transcript_from_doc(doc: object) -> tuple[Draw, ...]:
    if not isinstance(doc, list):
        raise TapeError("tape document must be a list of draws")
    draws = []
    for entry in doc:
        if not isinstance(entry, dict) or "kind" not in entry or "label" not in entry:
            raise TapeError(f"malformed draw entry: {entry!r}")
        label = tuple(entry["label"])
        if entry["kind"] == "bit":
            draws.append(Draw("bit", label, parse_rational(entry.get("p"), "bit p"),
                              bool(entry.get("value"))))
        elif entry["kind"] == "choice":
            n = entry.get("n")
            if not isinstance(n, int) or n < 1:
                raise TapeError(f"malformed choice entry: {entry!r}")
            draws.append(Draw("choice", label, n, int(entry.get("value", 0))))
        else:
            raise TapeError(f"unknown draw kind {entry['kind']!r}")
    return tuple(draws)
