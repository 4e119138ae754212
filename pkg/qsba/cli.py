#!/usr/bin/env python3
"""
QSBA command-line front end.

Subcommands:
    run      Execute one scenario and write its report and transcript
    sweep    Exhaustive adversary sweep, tabulated as CSV
    compare  Resource comparison against the three-party baseline
    attack   Forgery Monte Carlo
    budget   Key-budget feasibility of a scenario's pools

Exit codes: 0 success, 1 verdict violation, 2 invalid configuration,
3 key exhaustion.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from .adversary import DEFAULT_FAMILY
from .config import config
from .errors import InvalidCostError, InvalidParamsError, InvalidScenarioError, KeyExhaustedError, PreconditionError
from .forgery import forgery_monte_carlo
from .gf2hash import BitString
from .ledger import AuthCostModel
from .logging_utils import configure_logging, get_logger
from .protocol import ProtocolParams, RunStatus, run_protocol
from .reports import build_budget_report, build_compare_report, build_run_report, write_report
from .scenario import load_scenario
from .sweep import SweepResult, forgery_sweep, strategy_sweep, violation_rate

logger = get_logger("qsba.cli")

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INVALID = 2
EXIT_KEY_EXHAUSTED = 3


def _csv_ints(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _csv_names(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _out_dir(cli_value: Optional[str], scenario_value: Optional[str] = None) -> Path:
    if cli_value:
        path = Path(cli_value)
    elif scenario_value:
        path = Path(scenario_value)
    else:
        return config.output_dir()
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True, indent=2))


# ---------- run ----------
def cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario.run.seed = args.seed
    if args.auth_cost is not None:
        scenario.run.auth_cost = AuthCostModel(args.auth_cost)

    outcome = run_protocol(
        scenario.params(),
        scenario.command(),
        seed=scenario.run.seed,
        pools=scenario.pool_capacities(),
        adversary=scenario.adversary_strategy(),
        auth_cost=scenario.run.auth_cost,
    )

    out_dir = _out_dir(args.out, scenario.report.out_dir)
    transcript_path = outcome.transcript.write(
        out_dir / (scenario.report.transcript_name or config.output.transcript_name)
    )
    report = build_run_report(scenario, outcome, transcript_path.name)
    report_path = write_report(report, out_dir / (scenario.report.report_name or config.output.report_name))

    _emit(
        {
            "scenario": report.scenario,
            "status": report.status,
            "condition_I": report.condition_I,
            "condition_II": report.condition_II,
            "hash_ops": report.ledger["hash_ops"],
            "auth_uses": report.ledger["auth_uses"],
            "report": str(report_path),
        }
    )
    if outcome.status == RunStatus.ABORTED_KEY_EXHAUSTED:
        return EXIT_KEY_EXHAUSTED
    return EXIT_OK if report.exit_ok else EXIT_VIOLATION


# ---------- sweep ----------
def _m_values(rule: str, n: int) -> List[int]:
    if rule == "all":
        return list(range(1, n - 1))
    if rule == "max":
        return [n - 2]
    m = int(rule)
    return [m] if 1 <= m <= n - 2 else []


def cmd_sweep(args: argparse.Namespace) -> int:
    combined = SweepResult()
    for n in args.n:
        for m in _m_values(args.m, n):
            params = ProtocolParams(n, m, args.l, BitString.zeros(8))
            command = BitString.from_int(1, args.message_bits)
            if args.strategies:
                result = strategy_sweep(
                    params, args.strategies, command=command, seed=args.seed, workers=args.workers
                )
                combined.rows.extend(result.rows)
            if args.forgery_trials:
                forged = forgery_sweep(
                    params,
                    [1],
                    args.forgery_trials,
                    message_bits=args.message_bits,
                    seed=args.seed,
                    workers=args.workers,
                )
                rate, (low, high) = violation_rate(forged)
                _emit(
                    {
                        "n": n,
                        "m": m,
                        "l": args.l,
                        "forgery_trials": args.forgery_trials,
                        "violation_rate": rate,
                        "ci95": [low, high],
                        "bound": min(1.0, (args.message_bits + args.l) / 2.0**args.l),
                    }
                )

    out_dir = _out_dir(args.out)
    path = out_dir / "sweep.csv"
    combined.to_csv(path)
    violations = combined.violations()
    _emit({"runs": len(combined.rows), "violations": len(violations), "table": str(path)})
    return EXIT_VIOLATION if violations else EXIT_OK


# ---------- compare ----------
def cmd_compare(args: argparse.Namespace) -> int:
    report = build_compare_report(args.n, args.m, args.l, AuthCostModel(args.auth_cost), args.seed)
    if args.format == "csv":
        text = _csv(report.rows())
    else:
        text = json.dumps(report.model_dump(), sort_keys=True, indent=2) + "\n"
    _write_or_print(text, args.out, f"compare.{args.format}")
    return EXIT_OK


def _csv(rows: List[dict]) -> str:
    return pd.DataFrame.from_records(rows).to_csv(index=False)


def _write_or_print(text: str, out: Optional[str], name: str) -> None:
    if out:
        path = _out_dir(out) / name
        path.write_text(text, encoding="utf-8")
        logger.info("output_written", path=str(path))
    else:
        sys.stdout.write(text)


# ---------- attack ----------
def cmd_attack(args: argparse.Namespace) -> int:
    report = forgery_monte_carlo(
        args.l, args.message_bits, args.trials, seed=args.seed, sparse_window=args.sparse_window
    )
    _emit({**report.model_dump(), "within_bound": report.within_bound})
    return EXIT_OK if report.within_bound else EXIT_VIOLATION


# ---------- budget ----------
def cmd_budget(args: argparse.Namespace) -> int:
    report = build_budget_report(load_scenario(args.scenario))
    if args.format == "csv":
        rows = [
            {
                "link_class": cls,
                "pool_bits": report.pools[cls],
                "bits_per_round": report.per_round_costs[cls],
                "max_rounds": report.max_rounds[cls],
                "binding": cls == report.binding,
            }
            for cls in sorted(report.max_rounds)
        ]
        sys.stdout.write(_csv(rows))
    else:
        _emit(report.model_dump())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsba", description="Signed-message Byzantine agreement simulator", allow_abbrev=False
    )
    parser.add_argument("--log-level", default=config.logging.level, help="Log level (default: %(default)s)")
    parser.add_argument("--log-file", default=config.logging.file, help="Rotating JSON log file")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run one scenario")
    run.add_argument("--scenario", required=True, help="Scenario TOML path or preset name")
    run.add_argument("--seed", type=int, help="Override the scenario seed")
    run.add_argument("--out", help="Output directory (default: $QSBA_OUTPUT_DIR)")
    run.add_argument("--auth-cost", choices=[c.value for c in AuthCostModel])
    run.set_defaults(handler=cmd_run)

    sweep = sub.add_parser("sweep", help="Exhaustive adversary sweep")
    sweep.add_argument("--n", type=_csv_ints, default=[3, 4, 5], help="Network sizes, e.g. 3,4,5")
    sweep.add_argument("--m", default="all", help="all, max, or a fixed fault bound")
    sweep.add_argument("--strategies", type=_csv_names, default=list(DEFAULT_FAMILY))
    sweep.add_argument("--l", type=int, default=16)
    sweep.add_argument("--message-bits", type=int, default=16)
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--out")
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--forgery-trials", type=int, default=0, help="Also run N forge-strategy trials per (n, m)")
    sweep.set_defaults(handler=cmd_sweep)

    compare = sub.add_parser("compare", help="Resource comparison tables")
    compare.add_argument("--n", type=int, required=True)
    compare.add_argument("--m", type=int, required=True)
    compare.add_argument("--l", type=int, required=True)
    compare.add_argument("--auth-cost", choices=[c.value for c in AuthCostModel], default="axiomatic")
    compare.add_argument("--format", choices=["json", "csv"], default="json")
    compare.add_argument("--seed", type=int, default=0)
    compare.add_argument("--out")
    compare.set_defaults(handler=cmd_compare)

    attack = sub.add_parser("attack", help="Forgery Monte Carlo")
    attack.add_argument("--l", type=int, default=16)
    attack.add_argument("--message-bits", type=int, default=1000)
    attack.add_argument("--trials", type=int, default=10_000)
    attack.add_argument("--sparse-window", type=int)
    attack.add_argument("--seed", type=int, default=0)
    attack.set_defaults(handler=cmd_attack)

    budget = sub.add_parser("budget", help="Key-budget feasibility")
    budget.add_argument("--scenario", required=True, help="Scenario TOML path or preset name")
    budget.add_argument("--format", choices=["json", "csv"], default="json")
    budget.set_defaults(handler=cmd_budget)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level, args.log_file)
    problems = config.validate_config()
    if problems:
        for problem in problems:
            print(f"invalid environment: {problem}", file=sys.stderr)
        return EXIT_INVALID

    try:
        return args.handler(args)
    except InvalidScenarioError as e:
        print(f"invalid scenario: {e}", file=sys.stderr)
        for err in e.errors:
            print(f"  {err}", file=sys.stderr)
        return EXIT_INVALID
    except (InvalidParamsError, InvalidCostError, PreconditionError) as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return EXIT_INVALID
    except KeyExhaustedError as e:
        print(f"key exhausted: {e}", file=sys.stderr)
        return EXIT_KEY_EXHAUSTED


if __name__ == "__main__":
    sys.exit(main())
