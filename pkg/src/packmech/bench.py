"""Approximation benchmarking: exact expected values against exact optima.

For each generated instance the mechanism's expected value is computed by
full branch enumeration (never sampled) and divided into the oracle optimum.
Instances the oracle refuses are recorded as skipped, never approximated.
Results land in a CSV, and a small matplotlib report (ratio histogram plus
per-instance scatter) is rendered next to it.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import SizeGateError
from .generators import GENERATORS
from .oracle import exact_opt
from .properties import expected_total, trial_rng
from .rationals import format_rational
from .registry import Params, bind

CSV_FIELDS = (
    "instance_id",
    "mechanism",
    "expected_value",
    "optimum",
    "ratio",
    "branches",
    "skipped",
    "seed",
)


@dataclass(frozen=True)
class BenchRecord:
    instance_id: str
    mechanism: str
    expected_value: Fraction | None
    optimum: Fraction | None
    ratio: Fraction | None
    branches: int
    skipped: bool
    seed: int
    wall_time: float


def run_bench(
    mechanism: str,
    generator: str,
    trials: int,
    seed: int,
    params: Params = Params(),
) -> list[BenchRecord]:
    if generator not in GENERATORS:
        raise KeyError(f"unknown generator {generator!r}")
    runner = bind(mechanism, params)
    gen = GENERATORS[generator]
    records = []
    for i in range(trials):
        instance_id = f"{generator}-{seed}-{i:04d}"
        inst = gen(trial_rng(seed, i), name=instance_id)
        started = time.perf_counter()
        try:
            optimum, _ = exact_opt(inst)
        except SizeGateError:
            records.append(
                BenchRecord(instance_id, mechanism, None, None, None, 0, True, seed, 0.0)
            )
            continue
        value, branches = expected_total(runner, inst)
        ratio = optimum / value if value > 0 else None
        records.append(
            BenchRecord(
                instance_id,
                mechanism,
                value,
                optimum,
                ratio,
                branches,
                False,
                seed,
                time.perf_counter() - started,
            )
        )
    return records


def summarize(records: list[BenchRecord]) -> dict:
    ratios = [r.ratio for r in records if r.ratio is not None]
    return {
        "instances": len(records),
        "skipped": sum(1 for r in records if r.skipped),
        "worst_ratio": max(ratios, default=None),
        "mean_ratio": (sum(ratios, Fraction(0)) / len(ratios)) if ratios else None,
    }


def write_csv(records: list[BenchRecord], path: Path) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_FIELDS)
        for r in records:
            writer.writerow(
                [
                    r.instance_id,
                    r.mechanism,
                    "" if r.expected_value is None else format_rational(r.expected_value),
                    "" if r.optimum is None else format_rational(r.optimum),
                    "" if r.ratio is None else format_rational(r.ratio),
                    r.branches,
                    int(r.skipped),
                    r.seed,
                ]
            )


def render_figure(records: list[BenchRecord], summary: dict, path: Path) -> None:
    """Ratio histogram and per-instance scatter, written as a PNG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ratios = [float(r.ratio) for r in records if r.ratio is not None]
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 3.5))
    if ratios:
        left.hist(ratios, bins=min(25, max(5, len(set(ratios)))), color="#417aa6")
        right.plot(range(len(ratios)), sorted(ratios), ".", color="#a65341", ms=4)
        right.axhline(1.0, color="grey", lw=0.8, ls=":")
    left.set_xlabel("optimum / expected value")
    left.set_ylabel("instances")
    right.set_xlabel("instances (sorted)")
    right.set_ylabel("ratio")
    mech = records[0].mechanism if records else "?"
    worst = summary.get("worst_ratio")
    fig.suptitle(
        f"{mech}: worst ratio {float(worst):.3f}" if worst is not None else mech
    )
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
