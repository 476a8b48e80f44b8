"""Command line entry point: ``cyclicprox run`` and ``cyclicprox check``."""
import argparse
import sys

from .scenario import (
    ScenarioError,
    check_exit_code,
    emit,
    hypotheses_summary,
    load_scenario,
    run_scenario,
    static_checks,
    with_overrides,
)

EXIT_OK, EXIT_FAIL, EXIT_PARSE = 0, 1, 2


def _load(path, **overrides):
    try:
        return with_overrides(load_scenario(path), **overrides)
    except ScenarioError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
    return None


def cmd_run(args) -> int:
    s = _load(args.scenario, tol=args.tol, max_steps=args.max_steps, seed=args.seed)
    if s is None:
        return EXIT_PARSE
    art = run_scenario(s, parallel=args.parallel)
    for path in emit(art, args.out):
        print(path)
    h = art.hypotheses
    print("hypotheses: all met" if h["all_met"] else "hypotheses unmet: " + "; ".join(h["unmet"]))
    return EXIT_OK


def cmd_check(args) -> int:
    s = _load(args.scenario)
    if s is None:
        return EXIT_PARSE
    verdicts = static_checks(s)
    for v in verdicts:
        margin = "" if v.margin is None else f"  margin {v.margin:.6g}"
        print(f"{v.name:<20} {v.status}{margin}")
    h = hypotheses_summary(verdicts)
    print(f"ordering route: {h['ordering_route'] or 'none'}")
    if not h["all_met"]:
        print("unmet: " + "; ".join(h["unmet"]))
    return check_exit_code(verdicts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cyclicprox", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run checks and trajectories, write report and traces")
    run.add_argument("--scenario", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--tol", type=float)
    run.add_argument("--max-steps", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--parallel", action="store_true", help="run trajectories concurrently")
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("check", help="hypothesis verdicts only (exit 0 pass, 1 fail, 2 parse error)")
    check.add_argument("--scenario", required=True)
    check.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
