"""Command line entry point: ``toposhape run|validate|inspect``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from .config import load_config
from .errors import ConfigError, StuckInfeasible, ToposhapeError
from .grid import read_field
from .redistance import LevelSetFunction, eikonal_residual, reinitialize
from .topology import analyze

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_STUCK = 3
EXIT_IO = 4


def cmd_run(args) -> int:
    from .runner import run_config   # pulls in matplotlib

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.output:
        cfg.output = args.output
    if args.max_iters is not None:
        cfg.optimizer = replace(cfg.optimizer, max_iters=args.max_iters)
    try:
        result = run_config(cfg, figures=not args.no_figures)
    except StuckInfeasible as exc:
        print(f"stuck: {exc}", file=sys.stderr)
        return EXIT_STUCK
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    last = result.history[-1] if result.history else None
    if not result.ok:
        print(f"stuck: {result.message}", file=sys.stderr)
        print(f"output written to {cfg.output}", file=sys.stderr)
        return EXIT_STUCK
    print(f"{result.status} after {last.iter} iterations: F={last.F:.6g} "
          f"area={last.area:.6g} components={last.components_pos}")
    print(f"output written to {cfg.output}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validate import SUITES, format_table, run_suites

    if args.list:
        print("\n".join(SUITES))
        return EXIT_OK
    names = args.suite or None
    unknown = [n for n in names or [] if n not in SUITES]
    if unknown:
        print(f"unknown suite(s): {', '.join(unknown)}", file=sys.stderr)
        return EXIT_CONFIG
    results = run_suites(names, flip_u1=args.inject_u1_sign_flip)
    print(format_table(results))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed")
    return EXIT_OK if passed == len(results) else EXIT_FAILED


def cmd_inspect(args) -> int:
    try:
        field = read_field(args.field)
    except (OSError, ValueError) as exc:
        print(f"cannot read field: {exc}", file=sys.stderr)
        return EXIT_IO
    report = analyze(field)
    print(TOPOLOGY_FMT.format(r=report))
    try:
        band = args.band if args.band is not None else _guess_band(field)
        phi = reinitialize(field, band) if args.reinit else LevelSetFunction(field, band, True)
        residual = eikonal_residual(phi)
        print(f"eikonal_residual: {residual!r}")
    except ToposhapeError as exc:
        print(f"eikonal_residual: n/a ({exc})")
    return EXIT_OK


TOPOLOGY_FMT = ("components_pos: {r.components_pos}\nholes: {r.holes}\nmin_gap: {r.min_gap!r}\n"
                "min_thickness: {r.min_thickness!r}\nmin_hole_gap: {r.min_hole_gap!r}")


def _guess_band(field) -> float:
    """Band width of a saved field: the clamp value outside the band."""
    return float(np.max(np.abs(field.values)))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toposhape",
                                     description="Level set shape optimization with "
                                                 "topology-preserving log barriers.")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for per-iteration progress, -vv for step-size details")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an optimization from a TOML config")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="override the output directory")
    p.add_argument("--max-iters", type=int, help="override optimizer.max_iters")
    p.add_argument("--no-figures", action="store_true", help="skip the PNG report figures")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="run the analytic oracle checks")
    p.add_argument("suite", nargs="*", help="subset of suites to run (default: all)")
    p.add_argument("--list", action="store_true", help="list suite names and exit")
    p.add_argument("--inject-u1-sign-flip", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("inspect", help="topology and eikonal residual of a saved field")
    p.add_argument("field")
    p.add_argument("--band", type=float, help="band width (default: max |phi| of the file)")
    p.add_argument("--reinit", action="store_true",
                   help="reinitialize before measuring the eikonal residual")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
