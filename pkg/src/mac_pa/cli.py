"""Command-line entry points.

    mac-pa run <config-file> [--out DIR] [--seed N] [--threads N]
    mac-pa fig1|fig2|fig3 [--out DIR] [--seed N] [--threads N] [--mc-draws N]
    mac-pa selftest

Exit codes: 0 ok, 2 configuration error, 3 solver non-convergence (outputs
are still written with the affected rows flagged).
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    ConfigError,
    parse_config_file,
    run_fig1,
    run_fig2,
    run_fig3,
    run_scenario,
    write_outputs,
)
from .selftest import run_selftest

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3

FIG_RUNNERS = {"fig1": run_fig1, "fig2": run_fig2, "fig3": run_fig3}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mac-pa",
        description="Power-allocation game solver for the fast-fading MIMO MAC.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario config file")
    run_p.add_argument("config", help="path to the key = value scenario file")
    _common(run_p)

    for fig in FIG_RUNNERS:
        fig_p = sub.add_parser(fig, help=f"run the {fig} reference scenario")
        _common(fig_p)

    sub.add_parser("selftest", help="run the quick property suites")
    return parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--seed", type=int, default=None, help="Monte-Carlo seed override")
    p.add_argument("--threads", type=int, default=1, help="parallel sweep points")
    p.add_argument(
        "--mc-draws",
        type=int,
        default=None,
        help="Monte-Carlo draws per row (default: config value, 500 for figures)",
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "selftest":
        return EXIT_OK if run_selftest() else 1

    try:
        if args.command == "run":
            cfg = parse_config_file(args.config)
            if args.seed is not None:
                cfg.seed = args.seed
            if args.mc_draws is not None:
                cfg.mc_draws = args.mc_draws
            cfg.validate()
            run = run_scenario(cfg, threads=args.threads)
        else:
            seed = 1 if args.seed is None else args.seed
            draws = 500 if args.mc_draws is None else args.mc_draws
            run = FIG_RUNNERS[args.command](mc_draws=draws, seed=seed, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    csv_path, diag_path = write_outputs(run, args.out)
    print(f"wrote {csv_path}")
    print(f"wrote {diag_path}")
    if run.any_nonconverged:
        print("warning: some rows did not converge (see diagnostics)", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
