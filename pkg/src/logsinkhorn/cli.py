"""``logsinkhorn`` command line entry point.

Exit codes: 0 success, 2 configuration error, 3 solver divergence,
4 iteration cap reached before the requested tolerance.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys

import numpy as np

from . import __version__
from ._validation import SinkhornDivergenceError
from .bench import EXPERIMENTS, ExperimentConfig, run_experiment
from .core import StoppingRule
from .ranking import RankingProblem, minmax_normalize, sinkhorn_rank

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_CAP = 0, 2, 3, 4

log = logging.getLogger("logsinkhorn")


def _add_common(p):
    p.add_argument("--n", type=int, default=200, help="support size (grid side for 2-D)")
    p.add_argument("--L", type=int, default=10, help="1/epsilon")
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--out", default=None, help="output path (stdout if omitted)")


def build_parser():
    parser = argparse.ArgumentParser(prog="logsinkhorn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        _add_common(p)
        p.add_argument("--kappa", type=float, default=1.0)
        p.add_argument("--repeats", type=int, default=30)
        p.add_argument("--backend", choices=("fsl", "dense", "both"), default="both")
        p.add_argument("--parallel-repeats", action="store_true")
        p.add_argument("--cap", type=int, default=4096, help="plan materialization cap")
        if name == "marginal-curve":
            p.add_argument("--Ls", type=int, nargs="+", default=[10, 15, 20])
            p.add_argument("--tol-start", type=float, default=1e-1)
            p.add_argument("--n-tols", type=int, default=5)
            p.add_argument("--max-iter", type=int, default=10_000)
            p.add_argument("--dim", type=int, choices=(1, 2), default=1)

    p = sub.add_parser("rank", help="soft-rank a CSV column or JSON array")
    _add_common(p)
    p.add_argument("input", help="CSV (first column) or JSON array; '-' for stdin")
    p.add_argument("--cost", choices=("log", "squared"), default="log")
    p.add_argument("--backend", choices=("fsl", "dense"), default=None)
    p.add_argument("--no-preprocess", action="store_true")
    p.add_argument("--normalize", action="store_true")
    return parser


def _config_from_args(args):
    kwargs = dict(
        experiment=args.command,
        n=args.n,
        L=args.L,
        kappa=args.kappa,
        iterations=args.iterations,
        repeats=args.repeats,
        seed=args.seed,
        backend=args.backend,
        parallel_repeats=args.parallel_repeats,
        materialize_cap=args.cap,
    )
    if args.command == "marginal-curve":
        kwargs.update(
            Ls=tuple(args.Ls),
            tol_start=args.tol_start,
            n_tols=args.n_tols,
            max_iter=args.max_iter,
            dim=args.dim,
        )
        if args.tol is not None:
            kwargs["tol"] = args.tol
    return ExperimentConfig(**kwargs)


def read_values(source):
    text = sys.stdin.read() if source == "-" else open(source).read()
    stripped = text.lstrip()
    if stripped.startswith("["):
        return np.asarray(json.loads(stripped), dtype=np.float64)
    values = []
    for row in csv.reader(io.StringIO(text)):
        if not row or not row[0].strip():
            continue
        try:
            values.append(float(row[0]))
        except ValueError:
            if values:
                raise
            # header line
    return np.asarray(values)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _run_rank(args):
    x = read_values(args.input)
    problem = RankingProblem.from_values(
        x, args.cost, 1.0 / args.L, preprocess=not args.no_preprocess
    )
    backend = args.backend or ("fsl" if args.cost == "log" else "dense")
    stop = (
        StoppingRule.fixed(args.iterations)
        if args.tol is None
        else StoppingRule.until(args.tol, args.iterations)
    )
    ranks, scalings = sinkhorn_rank(problem, stop, backend, return_scalings=True)
    if args.normalize:
        ranks = minmax_normalize(ranks)
    if args.format == "json":
        text = json.dumps({"ranks": ranks.tolist(), "iterations": scalings.iterations,
                           "marginal_error": scalings.marginal_error}) + "\n"
    else:
        text = "rank\n" + "".join(f"{r!r}\n" for r in ranks.tolist())
    _emit(text, args.out)
    return EXIT_CAP if scalings.converged is False else EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.command == "rank":
            return _run_rank(args)
        config = _config_from_args(args)
        log.info("running %s", config)
        report = run_experiment(config)
    except SinkhornDivergenceError as exc:
        print(f"logsinkhorn: solver diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ValueError, TypeError, OSError) as exc:
        print(f"logsinkhorn: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(report.to_csv() if args.format == "csv" else report.to_json() + "\n", args.out)
    if report.summary.get("cap_hit"):
        return EXIT_CAP
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
