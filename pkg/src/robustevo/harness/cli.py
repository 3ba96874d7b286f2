"""Command line entry point: ``robustevo run`` and ``robustevo analyze``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .runner import analyze, run_experiment


def _cmd_run(args):
    config = load_config(args.config).with_overrides(
        seed=args.seed, replications=args.replications, out=args.out)
    if args.workers is not None:
        config.workers = args.workers

    def progress(i, res):
        print(f"replication {i}: best performance {res.best_performance:.4f} "
              f"after {res.episodes_used} episodes", flush=True)

    table = run_experiment(config, progress=None if args.quiet else progress)
    s = table.stats
    print(f"{table.condition}: n={s['n']} median={s['median']:.4f} mean={s['mean']:.4f} "
          f"-> {config.out}")
    return 0


def _cmd_analyze(args):
    rows = analyze([args.dir] + list(args.compare or []), out=args.out)
    for pair, u, p, q in rows:
        print(f"{pair}: U={u:g} p={p:.4g} p_adj={q:.4g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustevo",
                                     description="Evolve controllers robust to varying conditions.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress details")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a replicated experiment from an INI config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, help="override the master seed")
    p_run.add_argument("--replications", type=int, help="override the replication count")
    p_run.add_argument("--out", help="override the output directory")
    p_run.add_argument("--workers", type=int, help="parallel worker processes")
    p_run.add_argument("-q", "--quiet", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_an = sub.add_parser("analyze", help="compare experiment directories")
    p_an.add_argument("dir")
    p_an.add_argument("--compare", nargs="*", default=[], metavar="DIR")
    p_an.add_argument("--out", help="output directory (default: <dir>/analysis)")
    p_an.set_defaults(func=_cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
