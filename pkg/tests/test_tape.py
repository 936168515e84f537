"""Random-tape behavior: seeding, replay, exact branch enumeration."""

from fractions import Fraction

import pytest

from packmech.errors import TapeError
from packmech.tape import (
    FixedTape,
    SeededTape,
    enumerate_branches,
    transcript_from_doc,
    transcript_to_doc,
)


def coin_flips(tape):
    a = tape.bit(("first",), Fraction(1, 2))
    arm = tape.choice(("arm",), 3)
    b = False
    if arm == 2:
        b = tape.bit(("extra",), Fraction(1, 3))
    return (a, arm, b)


def test_seeded_tape_is_deterministic():
    assert [SeededTape(9).bit(("x",), Fraction(1, 2)) for _ in range(1)] == [
        SeededTape(9).bit(("x",), Fraction(1, 2))
    ]


def test_fixed_tape_replays_by_label():
    source = SeededTape(3)
    result = coin_flips(source)
    replay = FixedTape(source.transcript)
    assert coin_flips(replay) == result
    assert replay.transcript == source.transcript


def test_fixed_tape_missing_label_errors():
    source = SeededTape(3)
    source.bit(("only",), Fraction(1, 2))
    with pytest.raises(TapeError, match="no draw"):
        FixedTape(source.transcript).bit(("other",), Fraction(1, 2))


def test_fixed_tape_param_mismatch_errors():
    source = SeededTape(3)
    source.bit(("p",), Fraction(1, 2))
    with pytest.raises(TapeError, match="mismatch"):
        FixedTape(source.transcript).bit(("p",), Fraction(1, 3))


def test_duplicate_label_rejected():
    tape = SeededTape(0)
    tape.bit(("dup",), Fraction(1, 2))
    with pytest.raises(TapeError, match="twice"):
        tape.bit(("dup",), Fraction(1, 2))


def test_enumeration_exact_probabilities():
    branches = enumerate_branches(coin_flips)
    # 2 coin values x (arms 0,1 + arm 2 splitting in two) = 8 leaves
    assert len(branches) == 8
    assert sum(b.probability for b in branches) == 1
    by_result = {b.result: b.probability for b in branches}
    assert by_result[(True, 2, True)] == Fraction(1, 2) * Fraction(1, 3) * Fraction(1, 3)
    assert by_result[(False, 0, False)] == Fraction(1, 2) * Fraction(1, 3)


def test_enumeration_of_deterministic_run():
    branches = enumerate_branches(lambda tape: 42)
    assert len(branches) == 1
    assert branches[0].probability == 1
    assert branches[0].result == 42


def test_zero_and_one_probability_do_not_branch():
    def run(tape):
        a = tape.bit(("always",), Fraction(1))
        b = tape.bit(("never",), Fraction(0))
        return (a, b)

    branches = enumerate_branches(run)
    assert len(branches) == 1
    assert branches[0].result == (True, False)
    assert branches[0].probability == 1


def test_transcript_json_roundtrip():
    source = SeededTape(11)
    coin_flips(source)
    doc = transcript_to_doc(source.transcript)
    assert transcript_from_doc(doc) == tuple(source.transcript)
