"""Seeded random instance generators for audits, property suites, and benches.

Values and capacities are small integers (occasionally halves) so ties and
boundary cases actually occur; knapsack capacities stay integral so the
dynamic-programming oracle applies. Every generator is a pure function of the
supplied random.Random, so suites are reproducible from a single seed.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations
from typing import Callable

from .instance import Instance, validate_instance
from .rationals import format_rational


def _value(rng: random.Random, high: int = 12, zero_ok: bool = False) -> str:
    if zero_ok and rng.random() < 0.1:
        return "0"
    if rng.random() < 0.25:
        return format_rational(Fraction(rng.randint(1, 2 * high), 2))
    return str(rng.randint(1, high))


def _partition_agents(rng: random.Random, item_ids: list[str], max_agents: int) -> list[list[str]]:
    n_agents = rng.randint(1, max(1, min(max_agents, len(item_ids))))
    agents: list[list[str]] = [[] for _ in range(n_agents)]
    for item_id in item_ids:
        agents[rng.randrange(n_agents)].append(item_id)
    return agents


def gen_matroid(
    rng: random.Random,
    demand: str,
    max_items: int = 10,
    max_agents: int = 4,
    name: str = "",
) -> Instance:
    """Random partition or uniform matroid instance."""
    n = rng.randint(1, max_items)
    ids = [f"a{idx:02d}" for idx in range(n)]
    items = [{"id": i, "value": _value(rng, zero_ok=True)} for i in ids]
    if rng.random() < 0.5:
        shuffled = ids[:]
        rng.shuffle(shuffled)
        n_classes = rng.randint(1, min(4, n))
        classes: list[list[str]] = [[] for _ in range(n_classes)]
        for idx, item_id in enumerate(shuffled):
            classes[idx % n_classes].append(item_id)
        constraint = {
            "matroid": "partition",
            "classes": [
                {"items": sorted(cls), "quota": rng.randint(1, 2)} for cls in classes
            ],
        }
    else:
        constraint = {"matroid": "uniform", "rank": rng.randint(1, n)}
    doc = {
        "kind": "matroid",
        "demand": demand,
        "items": items,
        "agents": _partition_agents(rng, ids, max_agents),
        "constraint": constraint,
    }
    return validate_instance(doc, name=name)


def gen_matching(
    rng: random.Random,
    demand: str,
    max_edges: int = 8,
    max_agents: int = 4,
    name: str = "",
) -> Instance:
    """Random (not necessarily bipartite) edge market."""
    n_vertices = rng.randint(3, 6)
    vertices = [f"v{idx}" for idx in range(n_vertices)]
    all_edges = list(combinations(vertices, 2))
    rng.shuffle(all_edges)
    n = rng.randint(1, min(max_edges, len(all_edges)))
    items = []
    ids = []
    for idx, (u, v) in enumerate(sorted(all_edges[:n])):
        item_id = f"e{idx:02d}"
        ids.append(item_id)
        items.append({"id": item_id, "value": _value(rng, high=16), "u": u, "v": v})
    doc = {
        "kind": "matching",
        "demand": demand,
        "items": items,
        "agents": _partition_agents(rng, ids, max_agents),
        "constraint": {},
    }
    return validate_instance(doc, name=name)


def gen_knapsack(
    rng: random.Random,
    demand: str,
    max_items: int = 8,
    max_agents: int = 4,
    name: str = "",
) -> Instance:
    """Random knapsack market with an integer budget and capacities."""
    n = rng.randint(1, max_items)
    budget = rng.randint(4, 16)
    items = []
    ids = []
    for idx in range(n):
        item_id = f"a{idx:02d}"
        ids.append(item_id)
        items.append(
            {
                "id": item_id,
                "value": _value(rng),
                "capacity": str(rng.randint(1, budget)),
            }
        )
    doc = {
        "kind": "knapsack",
        "demand": demand,
        "items": items,
        "agents": _partition_agents(rng, ids, max_agents),
        "constraint": {"capacity": str(budget)},
    }
    return validate_instance(doc, name=name)


def gen_gap(
    rng: random.Random,
    max_jobs: int = 5,
    max_machines: int = 3,
    pair_mode: str = "any",  # "any" | "small" | "large" (vs C_k/lambda, lambda=3)
    invariance: str | None = None,
    max_pairs_per_job: int | None = None,
    name: str = "",
) -> Instance:
    """Random assignment market.

    ``invariance`` fixes values or capacities across one side: "job-value",
    "job-capacity", "machine-value", or "machine-capacity". ``pair_mode``
    bounds capacities against one third of the machine budget.
    """
    lam = 3
    n_m = rng.randint(1, max_machines)
    machines = [f"m{idx}" for idx in range(n_m)]
    caps = {k: rng.randint(2 * lam, 6 * lam) for k in machines}
    n_j = rng.randint(1, max_jobs)
    jobs = [f"j{idx}" for idx in range(n_j)]

    def pick_value(rng: random.Random) -> Fraction:
        if rng.random() < 0.25:
            return Fraction(rng.randint(1, 24), 2)
        return Fraction(rng.randint(1, 12))

    def pick_capacity(cap: int) -> int:
        if pair_mode == "small":
            return rng.randint(1, cap // lam)
        if pair_mode == "large":
            return rng.randint((cap + lam - 1) // lam, cap)
        return rng.randint(1, cap)

    job_value = {j: pick_value(rng) for j in jobs}
    machine_value = {k: pick_value(rng) for k in machines}
    min_cap = min(caps.values())
    job_capacity = {j: pick_capacity(min_cap) for j in jobs}
    machine_capacity = {k: pick_capacity(caps[k]) for k in machines}

    items = []
    agents: list[list[str]] = []
    for j in jobs:
        held: list[str] = []
        limit = max_pairs_per_job or n_m
        compatible = rng.sample(machines, rng.randint(1, min(n_m, limit)))
        for k in sorted(compatible):
            item_id = f"{j}-{k}"
            if invariance == "job-value":
                v = job_value[j]
            elif invariance == "machine-value":
                v = machine_value[k]
            else:
                v = pick_value(rng)
            if invariance == "job-capacity":
                c: Fraction | int = job_capacity[j]
            elif invariance == "machine-capacity":
                c = machine_capacity[k]
            else:
                c = pick_capacity(caps[k])
            items.append(
                {
                    "id": item_id,
                    "value": format_rational(v),
                    "capacity": str(c),
                    "job": j,
                    "machine": k,
                }
            )
            held.append(item_id)
        agents.append(held)
    doc = {
        "kind": "gap",
        "demand": "unit",
        "items": items,
        "agents": agents,
        "constraint": {
            "machines": [{"id": k, "capacity": str(caps[k])} for k in machines]
        },
    }
    return validate_instance(doc, name=name)


def gen_lemma_values(rng: random.Random) -> list[Fraction]:
    """A value list satisfying the sampling-lemma precondition a1 < a/36.

    Each style guarantees the precondition by construction: the list is long
    enough that even the all-minimum draw keeps the total above 36 times the
    largest possible value.
    """
    style = rng.randrange(3)
    if style == 0:  # all equal: the binomial case
        n = rng.randint(37, 90)
        unit = Fraction(rng.randint(1, 4))
        return [unit] * n
    if style == 1:  # two denominations; min total 75 > 36 * 2
        n = rng.randint(75, 140)
        return sorted(
            (Fraction(rng.choice((1, 1, 2))) for _ in range(n)), reverse=True
        )
    # halves included; min total 110/2 = 55 > 36 * 3/2
    n = rng.randint(110, 180)
    return sorted(
        (Fraction(rng.choice((1, 2, 3)), 2) for _ in range(n)), reverse=True
    )


GeneratorFn = Callable[[random.Random, str], Instance]

# Name -> generator of one instance; used by the bench command and suites.
GENERATORS: dict[str, Callable[..., Instance]] = {
    "matroid-mul": lambda rng, name="": gen_matroid(rng, "mul", max_items=10, name=name),
    "matroid-unit": lambda rng, name="": gen_matroid(rng, "unit", max_items=10, name=name),
    "matching-unit": lambda rng, name="": gen_matching(rng, "unit", max_edges=8, name=name),
    "matching-mul": lambda rng, name="": gen_matching(rng, "mul", max_edges=8, name=name),
    "knapsack-unit": lambda rng, name="": gen_knapsack(rng, "unit", max_items=8, name=name),
    "knapsack-mul": lambda rng, name="": gen_knapsack(rng, "mul", max_items=8, name=name),
    "gap-general": lambda rng, name="": gen_gap(rng, name=name),
    "gap-small": lambda rng, name="": gen_gap(rng, pair_mode="small", name=name),
    "gap-large": lambda rng, name="": gen_gap(rng, pair_mode="large", name=name),
    "gap-job-value": lambda rng, name="": gen_gap(rng, invariance="job-value", name=name),
    "gap-job-capacity": lambda rng, name="": gen_gap(rng, invariance="job-capacity", name=name),
    "gap-machine-value": lambda rng, name="": gen_gap(rng, invariance="machine-value", name=name),
    "gap-machine-capacity": lambda rng, name="": gen_gap(
        rng, invariance="machine-capacity", name=name
    ),
}
