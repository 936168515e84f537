"""Truthful mechanisms without money for packing markets.

A library and CLI covering matroid, matching, knapsack, and job-machine
assignment markets: greedy and sampled truthful mechanisms, a
knapsack-constrained stable matching algorithm with virtual capacities,
exact brute-force optimum oracles, an exhaustive misreport auditor, and
property suites verifying the stability, threshold, and approximation
claims the designs rest on. All arithmetic is exact rational; all
randomness flows through explicit, enumerable tapes.
"""

from .errors import (
    InstanceError,
    LemmaInapplicable,
    MechanismError,
    PackmechError,
    SizeGateError,
    TapeError,
)
from .instance import (
    Instance,
    Item,
    Outcome,
    evaluate,
    is_feasible,
    load_instance,
    validate_instance,
)
from .registry import MECHANISMS, Params, bind
from .tape import FixedTape, SeededTape, enumerate_branches

__all__ = [
    "FixedTape",
    "Instance",
    "InstanceError",
    "Item",
    "LemmaInapplicable",
    "MECHANISMS",
    "MechanismError",
    "Outcome",
    "PackmechError",
    "Params",
    "SeededTape",
    "SizeGateError",
    "TapeError",
    "bind",
    "enumerate_branches",
    "evaluate",
    "is_feasible",
    "load_instance",
    "validate_instance",
]
