"""Command line entry point: ``pxkirchhoff run|verify|geometry``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import parse_config
from .errors import ParseError, PxKirchhoffError, ValidationError
from .report import EXIT_CONFIG, EXIT_IO, EXIT_SOLVER, compute_geometry, constants_csv, run_experiment
from .verification import verify_suite

SEED_ENV = "PXK_SEED"
DEFAULT_SEED = 7


def default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"{SEED_ENV} must be an integer, got {raw!r}")


def _load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read()), None
    except OSError as exc:
        return None, (EXIT_IO, f"cannot read {path}: {exc}")
    except (ParseError, ValidationError) as exc:
        return None, (EXIT_CONFIG, f"{path}: {exc}")


def build_parser():
    parser = argparse.ArgumentParser(prog="pxkirchhoff", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve an experiment and write the report files")
    run.add_argument("config")
    run.add_argument("--out", required=True, help="output directory")

    ver = sub.add_parser("verify", help="run the seeded property battery")
    ver.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or {DEFAULT_SEED}")

    geo = sub.add_parser("geometry", help="print the geometry constants of an experiment")
    geo.add_argument("config")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        seed = default_seed() if args.seed is None else args.seed
        status, _ = verify_suite(seed, stream=sys.stdout)
        return status

    spec, err = _load(args.config)
    if err is not None:
        print(f"error: {err[1]}", file=sys.stderr)
        return err[0]
    if args.command == "run":
        status = run_experiment(spec, args.out)
        print(f"status {status}: see {os.path.join(args.out, 'report.txt')}")
        return status
    try:
        geo, _ = compute_geometry(spec)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PxKirchhoffError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    sys.stdout.write(constants_csv(geo))
    return 0


if __name__ == "__main__":
    sys.exit(main())
