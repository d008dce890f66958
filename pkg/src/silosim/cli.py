"""Command-line entry point for silo filling experiments."""

from __future__ import annotations

import argparse
import sys

from .config import load_config, write_builtin_configs
from .experiments import run_evolve, run_experiment, run_similarity


def _add_common(sub):
    sub.add_argument("--config", required=True, help="experiment config file")
    sub.add_argument("--out", help="output directory (overrides output.dir)")
    sub.add_argument("--h-list", help="comma-separated grid spacings")
    sub.add_argument("--max-steps", type=int, help="cap on FD steps")
    sub.add_argument("--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="silosim",
        description="Silo filling: similarity solutions and evolutive profiles.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("similarity", "discrete similarity solutions only"),
        ("evolve", "evolutive finite-difference run only"),
        ("compare", "full exact/FE/FD comparison with error table"),
    ):
        _add_common(subs.add_parser(name, help=doc))
    ex = subs.add_parser("examples", help="write the built-in example configs")
    ex.add_argument("--out", default="configs", help="destination directory")
    ex.add_argument("--quiet", action="store_true")
    return parser


def _load(args):
    overrides = {}
    if args.out:
        overrides["output.dir"] = args.out
    if args.h_list:
        overrides["grid.h_list"] = args.h_list
    if args.max_steps is not None:
        overrides["scheme.max_steps"] = str(args.max_steps)
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    say = (lambda *a, **k: None) if args.quiet else print

    if args.command == "examples":
        for path in write_builtin_configs(args.out):
            say(f"wrote {path}")
        return 0

    cfg = _load(args)
    runner = {
        "similarity": run_similarity,
        "evolve": run_evolve,
        "compare": run_experiment,
    }[args.command]
    result = runner(cfg)

    if result.table is not None:
        say(result.table.to_csv(), end="")
    for row in result.rows:
        report = row.get("report")
        if report is not None and report.converged:
            say(f"h={row['h']:g}: c_obs={report.c_obs:.6g} in {report.steps} steps")
    for msg in result.failures:
        print(f"FAILED {msg}", file=sys.stderr)
    for msg in result.alarms:
        print(f"ALARM {msg}", file=sys.stderr)
    return 0 if not result.failures and not result.alarms else 1


if __name__ == "__main__":
    raise SystemExit(main())
