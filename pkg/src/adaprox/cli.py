"""Command-line harness.

Verbs:
  generate        draw a synthetic instance and write it to a text file
  sweep           run a method x theta x seed grid from a JSON config
  plot            render sweep results to SVG figures
  convex          run the convex-instance gap-decay suite
  envelope-trace  run one solve and write envelope stationarity diagnostics

Exit codes: 0 ok, 1 configuration error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import sys

from . import __version__, bench, svgplot
from .envelope import default_smoothing_weight, envelope_trace
from .models import ConfigurationError, ModelKind
from .problems import generate, load_instance, save_instance
from .solver import SolverConfig, run
from .stepsize import PLAIN, StepsizeParams


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaprox", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("generate", help="generate a synthetic instance")
    g.add_argument("--model", required=True, choices=["r1", "r2", "r3", "lad", "ls_convex"])
    g.add_argument("--m", type=int, default=300)
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--cond-kappa", type=float, default=1.0)
    g.add_argument("--p-fail", type=float, default=0.2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    s = sub.add_parser("sweep", help="run a sweep from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--output-dir", default=None)
    s.add_argument("--workers", type=int, default=0,
                   help=f"worker processes (default: ${bench.WORKERS_ENV_VAR} or 1)")

    p = sub.add_parser("plot", help="emit SVG figures from sweep results")
    p.add_argument("--results", required=True)
    p.add_argument("--output-dir", required=True)

    c = sub.add_parser("convex", help="convex-instance gap decay suite")
    c.add_argument("--config", default=None)
    c.add_argument("--output-dir", default=None)

    e = sub.add_parser("envelope-trace", help="stationarity diagnostics along one run")
    e.add_argument("--instance", required=True, help="instance file from `generate`")
    e.add_argument("--method", default="SGD-G", choices=sorted(k for k in bench.METHOD_TABLE if k != "MD"))
    e.add_argument("--theta", type=float, default=1.0)
    e.add_argument("--alpha", type=float, default=1.0)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--epochs", type=int, default=20)
    e.add_argument("--stride", type=int, default=None)
    e.add_argument("--rho", type=float, default=None,
                   help="envelope smoothing weight (default: per-instance heuristic)")
    e.add_argument("--out", required=True)
    return parser


def _cmd_generate(args) -> int:
    problem = generate(
        m=args.m,
        n=args.n,
        cond_kappa=args.cond_kappa,
        p_fail=args.p_fail,
        model=args.model,
        seed=args.seed,
    )
    save_instance(problem, args.out)
    print(args.out)
    return 0


def _cmd_sweep(args) -> int:
    config = bench.load_config(args.config)
    if args.workers:
        config.workers = args.workers
    csv_path = bench.sweep(config, output_dir=args.output_dir)
    print(csv_path)
    return 0


def _cmd_plot(args) -> int:
    for path in svgplot.emit_plots(args.results, args.output_dir):
        print(path)
    return 0


def _cmd_convex(args) -> int:
    print(bench.convex_suite(args.config, output_dir=args.output_dir))
    return 0


def _cmd_envelope_trace(args) -> int:
    problem = load_instance(args.instance)
    tag, policy = bench.METHOD_TABLE[args.method]
    horizon = args.epochs * problem.m
    cfg = SolverConfig(
        model=ModelKind(tag),
        policy=policy,
        params=StepsizeParams(theta=args.theta, alpha=args.alpha, horizon=horizon, mode=PLAIN),
        epochs=args.epochs,
        seed=args.seed,
        record_stride=args.stride,
    )
    record = run(problem, cfg)
    rho = args.rho if args.rho is not None else default_smoothing_weight(problem)
    grads_sq = envelope_trace(problem, record, rho)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "iterate_norm", "envelope_grad_norm_sq"])
        for k, nx, g2 in zip(record.recorded_iters, record.iterate_norm_series, grads_sq):
            writer.writerow([int(k), repr(float(nx)), repr(float(g2))])
    print(args.out)
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "sweep": _cmd_sweep,
    "plot": _cmd_plot,
    "convex": _cmd_convex,
    "envelope-trace": _cmd_envelope_trace,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (KeyError, ValueError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
