"""Built-in counterexample and lower-bound fixtures.

These instances pin the package's regression suite:

  * lowerbound-matching / lowerbound-matroid: two agents, paired high/low
    values (1+eps twice, 1 twice), where any deterministic mechanism beating
    a 2-approximation would be manipulable. The optimum is 2+eps.
  * figA-maxmatching: maximum-weight matching as a mechanism lets the agent
    holding the 10-valued edge jump to 20 by hiding it.
  * figB-greedy: plain greedy on a multi-unit matching market lets an agent
    move from utility 10 to 12 by hiding its best edge.
  * c2-gap: a four-job, three-machine market on which deferred acceptance is
    manipulable: job 4 ends unassigned when truthful but wins machine y
    (value 1/10) by hiding machine x.

Edge values for the two fig fixtures are reconstructions that reproduce the
quoted utility gaps, not recovered data.
"""

from __future__ import annotations

from fractions import Fraction

from .instance import Instance, validate_instance
from .rationals import format_rational

DEFAULT_EPSILON = Fraction(1, 10)


def lowerbound_matching(epsilon: Fraction = DEFAULT_EPSILON) -> Instance:
    high = format_rational(1 + epsilon)
    doc = {
        "kind": "matching",
        "demand": "unit",
        "items": [
            {"id": "t1u1", "value": high, "u": "t1", "v": "u1"},
            {"id": "t1u2", "value": "1", "u": "t1", "v": "u2"},
            {"id": "t2u1", "value": high, "u": "t2", "v": "u1"},
            {"id": "t2u2", "value": "1", "u": "t2", "v": "u2"},
        ],
        "agents": [["t1u1", "t1u2"], ["t2u1", "t2u2"]],
        "constraint": {},
    }
    return validate_instance(doc, name="lowerbound-matching")


def lowerbound_matroid(epsilon: Fraction = DEFAULT_EPSILON) -> Instance:
    high = format_rational(1 + epsilon)
    doc = {
        "kind": "matroid",
        "demand": "unit",
        "items": [
            {"id": "a1", "value": high},
            {"id": "a2", "value": high},
            {"id": "a3", "value": "1"},
            {"id": "a4", "value": "1"},
        ],
        "agents": [["a1", "a3"], ["a2", "a4"]],
        "constraint": {
            "matroid": "partition",
            "classes": [
                {"items": ["a1", "a2"], "quota": 1},
                {"items": ["a3", "a4"], "quota": 1},
            ],
        },
    }
    return validate_instance(doc, name="lowerbound-matroid")


def fig_a_maxmatching() -> Instance:
    doc = {
        "kind": "matching",
        "demand": "mul",
        "items": [
            {"id": "t1u1", "value": "10", "u": "t1", "v": "u1"},
            {"id": "t2u1", "value": "20", "u": "t2", "v": "u1"},
            {"id": "t2u2", "value": "15", "u": "t2", "v": "u2"},
        ],
        "agents": [["t1u1", "t2u1"], ["t2u2"]],
        "constraint": {},
    }
    return validate_instance(doc, name="figA-maxmatching")


def fig_b_greedy() -> Instance:
    doc = {
        "kind": "matching",
        "demand": "mul",
        "items": [
            {"id": "t1u1", "value": "10", "u": "t1", "v": "u1"},
            {"id": "t1u2", "value": "9", "u": "t1", "v": "u2"},
            {"id": "t2u1", "value": "8", "u": "t2", "v": "u1"},
            {"id": "t2u3", "value": "7", "u": "t2", "v": "u3"},
            {"id": "t3u2", "value": "13/2", "u": "t3", "v": "u2"},
            {"id": "t3u4", "value": "6", "u": "t3", "v": "u4"},
            {"id": "t4u3", "value": "6", "u": "t4", "v": "u3"},
        ],
        "agents": [["t1u1", "t3u4", "t4u3"], ["t1u2"], ["t2u1"], ["t2u3"], ["t3u2"]],
        "constraint": {},
    }
    return validate_instance(doc, name="figB-greedy")


def c2_gap() -> Instance:
    doc = {
        "kind": "gap",
        "demand": "unit",
        "items": [
            {"id": "p1x", "value": "1", "capacity": "1/2", "job": "1", "machine": "x"},
            {"id": "p1y", "value": "1/2", "capacity": "1", "job": "1", "machine": "y"},
            {"id": "p2x", "value": "1", "capacity": "1/2", "job": "2", "machine": "x"},
            {"id": "p2z", "value": "1/2", "capacity": "1", "job": "2", "machine": "z"},
            {"id": "p3x", "value": "10", "capacity": "1", "job": "3", "machine": "x"},
            {"id": "p3z", "value": "20", "capacity": "100", "job": "3", "machine": "z"},
            {"id": "p4x", "value": "5", "capacity": "1", "job": "4", "machine": "x"},
            {"id": "p4y", "value": "1/10", "capacity": "1", "job": "4", "machine": "y"},
        ],
        "agents": [["p1x", "p1y"], ["p2x", "p2z"], ["p3x", "p3z"], ["p4x", "p4y"]],
        "constraint": {
            "machines": [
                {"id": "x", "capacity": "1"},
                {"id": "y", "capacity": "1"},
                {"id": "z", "capacity": "100"},
            ]
        },
    }
    return validate_instance(doc, name="c2-gap")


def builtin_fixtures(epsilon: Fraction = DEFAULT_EPSILON) -> dict[str, Instance]:
    return {
        "lowerbound-matching": lowerbound_matching(epsilon),
        "lowerbound-matroid": lowerbound_matroid(epsilon),
        "figA-maxmatching": fig_a_maxmatching(),
        "figB-greedy": fig_b_greedy(),
        "c2-gap": c2_gap(),
    }
