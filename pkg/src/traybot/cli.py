"""Command line entry point: ``traybot run | validate-tables | compare``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import drive_logic
from .scenario import ConfigError, load_scenario_file
from .sim import run
from .trace import compare_traces, read_trace, write_trace

EXIT_OK = 0
EXIT_FAULT = 1
EXIT_TICK_LIMIT = 2
EXIT_CONFIG = 3
EXIT_DIVERGED = 4


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="traybot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one pick, bake and return mission")
    p_run.add_argument("--scenario", required=True, help="scenario file (key = value lines)")
    p_run.add_argument("--trace-out", help="write the JSONL event trace here")
    p_run.add_argument("--seed", type=_u64, help="override backlash.seed")
    p_run.add_argument("--max-ticks", type=_positive_int, help="override max_ticks")

    sub.add_parser("validate-tables", help="print and self-test the drive logic tables")

    p_cmp = sub.add_parser("compare", help="compare a trace against a golden trace")
    p_cmp.add_argument("--actual", required=True)
    p_cmp.add_argument("--golden", required=True)
    return parser


def cmd_run(args) -> int:
    try:
        scenario = load_scenario_file(args.scenario)
        if args.seed is not None:
            scenario = scenario.with_seed(args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.max_ticks is not None:
        scenario = dataclasses.replace(scenario, max_ticks=args.max_ticks)

    result = run(scenario)
    if args.trace_out:
        write_trace(result.events, args.trace_out)
    trays = {t.id: {"location": t.location.value, "bake": t.bake.value} for t in result.world.trays}
    summary = {
        "outcome": str(result.outcome),
        "ticks": result.ticks,
        "clock_s": round(result.world.clock, 6),
        "energy_j": round(result.world.ledger.total, 6),
        "trays": trays,
    }
    print(json.dumps(summary))
    return result.outcome.exit_code


def cmd_validate_tables(args) -> int:
    print(drive_logic.format_tables())
    failures = drive_logic.self_test()
    for line in failures:
        print(f"FAIL {line}")
    print("tables OK" if not failures else f"{len(failures)} failure(s)")
    return EXIT_OK if not failures else 1


def cmd_compare(args) -> int:
    try:
        actual = read_trace(args.actual)
        golden = read_trace(args.golden)
    except (OSError, ValueError) as exc:
        print(f"cannot read trace: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    div = compare_traces(actual, golden)
    if div is None:
        print("match")
        return EXIT_OK
    print(f"first divergence at tick {div.tick}: {div.field}")
    return EXIT_DIVERGED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "run": cmd_run,
        "validate-tables": cmd_validate_tables,
        "compare": cmd_compare,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
