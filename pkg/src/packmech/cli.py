"""Command-line interface.

Subcommands:

  run          run a mechanism on an instance file; prints the outcome and
               the tape transcript as JSON (replayable via --tape)
  audit        exhaustive misreport audit; writes an audit report JSON
  opt          exact optimum of an instance
  bench        approximation bench over a generator; CSV plus a PNG report
  paper-check  every built-in fixture regression and property suite at desk
               scale; exit 5 on any failure

Exit codes: 0 ok, 2 usage, 3 instance error, 4 size gate exceeded,
5 regression failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .audit import audit_truthfulness, report_to_doc
from .errors import InstanceError, LemmaInapplicable, SizeGateError, TapeError
from .instance import load_instance, outcome_to_doc
from .oracle import exact_opt
from .rationals import format_rational, parse_rational
from .registry import MECHANISMS, Params, bind
from .tape import FixedTape, SeededTape, transcript_from_doc, transcript_to_doc

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INSTANCE = 3
EXIT_GATE = 4
EXIT_REGRESSION = 5


def _dump(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _params(args: argparse.Namespace) -> Params:
    mu = parse_rational(args.mu, "mu") if args.mu is not None else None
    return Params(lam=args.lam, mu=mu)


def _cmd_run(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    if args.mechanism not in MECHANISMS:
        print(f"unknown mechanism {args.mechanism!r}", file=sys.stderr)
        return EXIT_USAGE
    runner = bind(args.mechanism, _params(args))
    if args.tape:
        tape = FixedTape(transcript_from_doc(json.loads(Path(args.tape).read_text())))
    else:
        tape = SeededTape(args.seed)
    outcome = runner(instance, instance.truthful_bids(), tape)
    doc = {
        "format": 1,
        "command": "run",
        "mechanism": args.mechanism,
        "instance": instance.name,
        "params": {
            "lambda": args.lam,
            "mu": None if args.mu is None else format_rational(parse_rational(args.mu, "mu")),
        },
        "outcome": outcome_to_doc(instance, outcome),
        "tape": transcript_to_doc(tape.transcript),
    }
    _dump(doc, args.out)
    return EXIT_OK


def _cmd_audit(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    if args.mechanism not in MECHANISMS:
        print(f"unknown mechanism {args.mechanism!r}", file=sys.stderr)
        return EXIT_USAGE
    runner = bind(args.mechanism, _params(args))
    report = audit_truthfulness(
        runner,
        instance,
        args.mode,
        mechanism_name=args.mechanism,
        max_items_per_agent=args.max_items,
    )
    _dump(report_to_doc(report), args.out)
    return EXIT_OK


def _cmd_opt(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    value, witness = exact_opt(instance)
    _dump(
        {
            "instance": instance.name,
            "value": format_rational(value),
            "witness": sorted(witness),
        },
        args.out,
    )
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    from .bench import render_figure, run_bench, summarize, write_csv
    from .generators import GENERATORS

    if args.mechanism not in MECHANISMS:
        print(f"unknown mechanism {args.mechanism!r}", file=sys.stderr)
        return EXIT_USAGE
    if args.generator not in GENERATORS:
        print(
            f"unknown generator {args.generator!r}; choose from "
            f"{', '.join(sorted(GENERATORS))}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    records = run_bench(
        args.mechanism, args.generator, args.trials, args.seed, _params(args)
    )
    summary = summarize(records)
    out = Path(args.out or "bench.csv")
    write_csv(records, out)
    figure = out.with_suffix(".png")
    render_figure(records, summary, figure)
    worst = summary["worst_ratio"]
    print(
        f"{args.mechanism} on {args.generator}: {summary['instances']} instances, "
        f"{summary['skipped']} skipped, worst ratio "
        + ("n/a" if worst is None else f"{format_rational(worst)} (~{float(worst):.3f})")
    )
    print(f"wrote {out} and {figure}")
    return EXIT_OK


def _cmd_paper_check(args: argparse.Namespace) -> int:
    from .properties import run_paper_check

    failures = 0
    for name, result in run_paper_check(scale=args.scale):
        status = "PASS" if result.ok else "FAIL"
        print(f"{status} {name}: {result.detail}")
        if not result.ok:
            failures += 1
    if failures:
        print(f"{failures} check(s) failed")
        return EXIT_REGRESSION
    print("all checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="packmech",
        description="Truthful mechanisms without money for packing markets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, with_mechanism: bool = True) -> None:
        if with_mechanism:
            p.add_argument("--mechanism", required=True, help="registry name")
        p.add_argument("--lambda", dest="lam", type=int, default=None,
                       help="size parameter (knapsack default 144, gap default 3)")
        p.add_argument("--mu", default=None, help="gap threshold factor (default 1/6)")
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p_run = sub.add_parser("run", help="run a mechanism on an instance")
    p_run.add_argument("--instance", required=True)
    common(p_run)
    group = p_run.add_mutually_exclusive_group()
    group.add_argument("--seed", type=int, default=0)
    group.add_argument("--tape", default=None, help="replay a recorded tape (JSON)")
    p_run.set_defaults(fn=_cmd_run)

    p_audit = sub.add_parser("audit", help="exhaustive misreport audit")
    p_audit.add_argument("--instance", required=True)
    common(p_audit)
    p_audit.add_argument("--mode", choices=("universal", "expectation"), default="universal")
    p_audit.add_argument("--max-items", type=int, default=10,
                         help="per-agent item gate for the deviation space")
    p_audit.set_defaults(fn=_cmd_audit)

    p_opt = sub.add_parser("opt", help="exact optimum of an instance")
    p_opt.add_argument("--instance", required=True)
    p_opt.add_argument("--out", default=None)
    p_opt.set_defaults(fn=_cmd_opt)

    p_bench = sub.add_parser("bench", help="approximation bench (CSV + PNG)")
    common(p_bench)
    p_bench.add_argument("--generator", required=True)
    p_bench.add_argument("--trials", type=int, default=100)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.set_defaults(fn=_cmd_bench)

    p_check = sub.add_parser("paper-check", help="fixture regressions and property suites")
    p_check.add_argument("--scale", type=int, default=1,
                         help="trial-count multiplier (default 1)")
    p_check.set_defaults(fn=_cmd_paper_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InstanceError, TapeError, LemmaInapplicable, OSError, json.JSONDecodeError) as exc:
        print(f"instance error: {exc}", file=sys.stderr)
        return EXIT_INSTANCE
    except SizeGateError as exc:
        print(f"size gate exceeded: {exc}", file=sys.stderr)
        return EXIT_GATE
    except KeyError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
