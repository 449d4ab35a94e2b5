"""Command line front end.

Three subcommands cover the benchmark workflow:

  afem run    one adaptive (or uniform) solve, CSV logs to --out
  afem sweep  a batch of runs from a sweep specification file
  afem rates  rate report over a benchmark output directory

`rates --assert` exits with status 2 when a fitted rate misses its
reference slope, which makes regression checks scriptable.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .driver import AdaptiveConfig
from .experiments import (collect_rates, parse_sweep_spec, rates_report,
                          run_benchmark)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="afem",
        description="adaptive finite elements for quasilinear problems")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a single adaptive run")
    run.add_argument("--domain", default="zshape",
                     help="zshape, lshape, or square_linear")
    run.add_argument("--theta", type=float, default=0.5,
                     help="bulk marking parameter in (0, 1]")
    run.add_argument("--lambda-alg", type=float, default=1e-2,
                     help="algebraic stopping threshold")
    run.add_argument("--lambda-pic", type=float, default=1e-2,
                     help="linearization stopping threshold")
    run.add_argument("--max-elements", type=int, default=10 ** 5,
                     help="stop after solving on a mesh this large")
    run.add_argument("--eta-tol", type=float, default=0.0,
                     help="stop once the estimator drops this low")
    run.add_argument("--uniform", action="store_true",
                     help="refine every element instead of marking")
    run.add_argument("--track-error", action="store_true",
                     help="log the energy error when the solution is known")
    run.add_argument("--diagnostics", action="store_true",
                     help="also log algebraic error and quasi-error")
    run.add_argument("--out", required=True, help="output directory")

    sweep = sub.add_parser("sweep", help="run a parameter sweep")
    sweep.add_argument("--spec", required=True,
                       help="sweep specification file (key=value lines)")
    sweep.add_argument("--out", required=True, help="output directory")

    rates = sub.add_parser("rates", help="report convergence rates")
    rates.add_argument("--in", dest="in_dir", required=True,
                       help="benchmark output directory")
    rates.add_argument("--assert", dest="check", action="store_true",
                       help="exit 2 unless every rate matches its reference")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        config = AdaptiveConfig(
            domain=args.domain, theta=args.theta,
            lambda_alg=args.lambda_alg, lambda_pic=args.lambda_pic,
            max_elements=args.max_elements, eta_tol=args.eta_tol,
            uniform=args.uniform, track_error=args.track_error,
            diagnostics=args.diagnostics)
        run_benchmark([config], out_dir=args.out, verbose=True)
        return 0
    if args.command == "sweep":
        with open(args.spec) as fh:
            configs = parse_sweep_spec(fh.read())
        if not configs:
            print("sweep spec expands to no runs", file=sys.stderr)
            return 1
        run_benchmark(configs, out_dir=args.out, verbose=True)
        return 0
    if args.command == "rates":
        try:
            rows = collect_rates(args.in_dir)
        except FileNotFoundError as exc:
            print(exc, file=sys.stderr)
            return 1
        ok = rates_report(rows)
        if args.check and not ok:
            return 2
        return 0
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
