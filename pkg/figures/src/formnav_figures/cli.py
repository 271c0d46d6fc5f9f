"""Batch renderer: trajectories and training curves from exported logs."""

from __future__ import annotations

import argparse
import sys

from .plots import PlotJob, SchemaError, plot_trajectories, plot_training_curves


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="formnav-figures")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trajectories", help="render one image per exported episode")
    p.add_argument("--in", dest="inputs", nargs=1, required=True, help="trajectory export")
    p.add_argument("--out", required=True, help="output image path (suffixed per episode)")

    p = sub.add_parser("curves", help="render training curves from metrics logs")
    p.add_argument("--in", dest="inputs", nargs="+", required=True, help="metrics logs")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--window", type=int, default=200, help="moving-average window")
    return parser


def run(argv: list[str]) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "trajectories":
            job = PlotJob(tuple(args.inputs), args.out, kind="trajectories")
            written = plot_trajectories(job)
            print("\n".join(written))
        else:
            job = PlotJob(
                tuple(args.inputs), args.out, smoothing_window=args.window,
                kind="training-curves",
            )
            print(plot_training_curves(job))
        return 0
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
