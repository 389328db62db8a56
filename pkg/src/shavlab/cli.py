"""shavlab run <subcommand> [--seed N] [--workers N] [--out DIR] [--param k=v ...]"""
from __future__ import annotations

import argparse
import sys

from .config import BUDGETS, SUBCOMMANDS, ConfigError, RunConfig, parse_params


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="shavlab", description="numeric checks for the amenability argument")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a check suite")
    run.add_argument("suite", choices=SUBCOMMANDS + ("all",))
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--out", default=None, help="report directory (default $SHAV_LAB_OUT or ./shavlab_out)")
    run.add_argument("--param", action="append", default=[], metavar="K=V",
                     help="override a budget size, e.g. wiener_N=200000 (repeatable)")
    run.add_argument("--tolerance-scale", type=float, default=1.0)
    run.add_argument("--budget", choices=sorted(BUDGETS), default="standard")
    run.add_argument("--quiet", action="store_true")
    sub.add_parser("list", help="list check ids by subcommand")
    return p


def main(argv=None) -> int:
    from .suites import REGISTRY, run_checks, write_report

    args = build_parser().parse_args(argv)
    if args.command == "list":
        for cid in sorted(REGISTRY):
            print(f"{REGISTRY[cid].group:14s} {cid}")
        return 0
    try:
        kw = {} if args.out is None else {"out": args.out}
        cfg = RunConfig(args.suite, args.seed, args.workers, tolerance_scale=args.tolerance_scale,
                        budget=args.budget, params=parse_params(args.param), **kw)
        cfg.sizes
    except (ConfigError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    results, timings = run_checks(cfg)
    path = write_report(cfg, results, timings)
    if not args.quiet:
        for r in results:
            status = "PASS" if r.passed else ("ERROR" if r.error else "FAIL")
            print(f"{status:5s} {r.id:28s} {timings[r.id]:7.1f}s" + (f"  {r.error}" if r.error else ""))
        print(f"report: {path}")
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
