"""
Command line interface.

Subcommands::

    smoothgraph generate-graph    --kind rgg --m 100 --seed 0 --out truth.edges [--coords coords.csv]
    smoothgraph generate-signals  --graph truth.edges --filter tikhonov --n 1000 --noise 0.1 --out data.csv
    smoothgraph learn             --data data.csv --model log --beta 1 --out learned.edges
    smoothgraph evaluate          --learned learned.edges --truth truth.edges
    smoothgraph experiment        --config smoothgraph/demos/rgg_tikhonov.json --out-dir results
    smoothgraph norms-check       --m 50 --seed 7

Exit codes: 0 on success, 1 on invalid arguments, configuration or input files, 2 on runtime
failures. Diagnostics go to stderr; results go to files and to stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import logging.handlers
import sys
from typing import List, Optional, Sequence

import pandas as pd

from . import __version__
from .exceptions import SmoothGraphError, ValidationError
from .experiment import ExperimentSpec, results_table, run_experiment
from .formats import read_edge_list, read_matrix_csv, write_edge_list, write_json, write_matrix_csv, write_table_csv
from .generators import GraphModelSpec, generate
from .graph_core import laplacian_from_edges, node_count, pairwise_distances, table_identities
from .metrics import DEFAULT_REL_THRESHOLD, evaluate
from .signals import FilterSpec, add_noise, generate_smooth_matrix, normalize_laplacian_scale, spectrum
from .solvers import SolverConfig, learn
from .toolkits import NOISE_STREAM, make_rng, monitor
from .types import ExecutorKind, FilterKind, GraphKind, ModelKind

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

__all__ = ['main', 'build_parser', 'configure_logging', 'EXIT_OK', 'EXIT_VALIDATION', 'EXIT_RUNTIME']


def __dir__():
    """Return a sorted list of names in this module."""
    return sorted(__all__)


class _ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with the validation exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def configure_logging(verbosity: int = 0, log_file: Optional[str] = None) -> None:
    """
    Log to stderr at WARNING, INFO (``-v``) or DEBUG (``-vv``), optionally also to a rotating file.
    """
    level = max(logging.DEBUG, logging.WARNING - 10 * verbosity)
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.handlers.RotatingFileHandler(log_file, maxBytes=1024 * 1024, backupCount=5))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


def _choices(kind) -> List[str]:
    return [member.value for member in kind]


def _bounded_int(minimum: int):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid int value: {text!r}") from None
        if value < minimum:
            raise argparse.ArgumentTypeError(f"must be at least {minimum}, got {value}")
        return value

    return parse


_nonnegative = _bounded_int(0)
_positive = _bounded_int(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="smoothgraph", description="Learn graphs from smooth signals.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    parser.add_argument("--log-file", help="also log to this rotating file")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    graph = commands.add_parser("generate-graph", help="sample a ground-truth graph")
    graph.add_argument("--kind", choices=_choices(GraphKind), default=GraphKind.RGG.value)
    graph.add_argument("--m", type=int, default=100)
    graph.add_argument("--seed", type=_nonnegative, default=0)
    graph.add_argument("--sigma", type=float, default=0.2)
    graph.add_argument("--threshold", type=float, default=0.6)
    graph.add_argument("--density-param", type=float, default=2.0)
    graph.add_argument("--p", type=float, default=None, help="edge probability (default 3/m)")
    graph.add_argument("--edges-per-node", type=int, default=2)
    graph.add_argument("--out", required=True, help="edge-list output")
    graph.add_argument("--coords", help="CSV output for node coordinates, when the family has any")
    graph.set_defaults(handler=_generate_graph)

    signals = commands.add_parser("generate-signals", help="draw smooth signals on a graph")
    signals.add_argument("--graph", required=True, help="edge-list of the graph")
    signals.add_argument("--filter", choices=_choices(FilterKind), default=FilterKind.TIKHONOV.value)
    signals.add_argument("--param", type=float, default=None, help="alpha (tikhonov) or t (heat)")
    signals.add_argument("--n", type=int, default=1000)
    signals.add_argument("--noise", type=float, default=0.0, help="noise to signal Frobenius ratio")
    signals.add_argument("--seed", type=_nonnegative, default=0)
    signals.add_argument("--trial", type=_nonnegative, default=0)
    signals.add_argument("--no-normalize", action="store_true", help="keep the Laplacian scale")
    signals.add_argument("--out", required=True, help="CSV output, one row per node")
    signals.set_defaults(handler=_generate_signals)

    learner = commands.add_parser("learn", help="learn a graph from data or distances")
    source = learner.add_mutually_exclusive_group(required=True)
    source.add_argument("--data", help="CSV data matrix, one row per node")
    source.add_argument("--distances", help="edge-list of squared distances")
    learner.add_argument("--model", choices=_choices(ModelKind), default=ModelKind.LOG_DEGREE.value)
    learner.add_argument("--alpha", type=float, default=1.0)
    learner.add_argument("--beta", type=float, default=1.0)
    learner.add_argument("--scale", type=float, default=None, help="total weight s of the l2 model (default m)")
    learner.add_argument("--sigma", type=float, default=None)
    learner.add_argument("--k", type=int, default=None)
    learner.add_argument("--gamma", type=float, default=None, help="step size (default: safe bound)")
    learner.add_argument("--tol", type=float, default=1e-4)
    learner.add_argument("--max-iter", type=int, default=100_000)
    learner.add_argument("--seed", type=_nonnegative, default=0, help="recorded in the result file")
    learner.add_argument("--out", required=True, help="edge-list output")
    learner.add_argument("--result", help="JSON summary output")
    learner.set_defaults(handler=_learn)

    evaluator = commands.add_parser("evaluate", help="compare a learned graph with the truth")
    evaluator.add_argument("--learned", required=True)
    evaluator.add_argument("--truth", required=True)
    evaluator.add_argument("--rel-threshold", type=float, default=DEFAULT_REL_THRESHOLD)
    evaluator.add_argument("--out", help="report output, .json or .csv")
    evaluator.set_defaults(handler=_evaluate)

    experiment = commands.add_parser("experiment", help="run a configured experiment cell")
    experiment.add_argument("--config", required=True, help="JSON experiment configuration")
    experiment.add_argument("--out-dir", default="results")
    experiment.add_argument("--workers", type=_positive, default=None)
    experiment.add_argument("--executor", choices=_choices(ExecutorKind), default=ExecutorKind.THREAD.value)
    experiment.add_argument("--trials", type=_positive, default=None, help="override the configured trial count")
    experiment.add_argument("--seed", type=_nonnegative, default=None, help="override the configured master seed")
    experiment.set_defaults(handler=_experiment)

    norms = commands.add_parser("norms-check", help="self-test of the graph space identities")
    norms.add_argument("--m", type=int, default=50)
    norms.add_argument("--n", type=int, default=20)
    norms.add_argument("--seed", type=_nonnegative, default=0)
    norms.add_argument("--tol", type=float, default=1e-9)
    norms.set_defaults(handler=_norms_check)
    return parser


def _generate_graph(args) -> int:
    spec = GraphModelSpec(kind=args.kind, m=args.m, seed=args.seed, sigma=args.sigma, threshold=args.threshold,
                          density_param=args.density_param, p=args.p, edges_per_node=args.edges_per_node)
    graph = generate(spec)
    write_edge_list(args.out, graph.weights)
    if args.coords and graph.coords is not None:
        write_matrix_csv(args.coords, graph.coords)
    print(f"{graph.edge_count} edges on {graph.m} nodes -> {args.out}")
    return EXIT_OK


def _generate_signals(args) -> int:
    L = laplacian_from_edges(read_edge_list(args.graph))
    if not args.no_normalize:
        L = normalize_laplacian_scale(L)
    X = generate_smooth_matrix(spectrum(L), FilterSpec(args.filter, args.param), args.n,
                               seed=args.seed, trial=args.trial)
    X = add_noise(X, args.noise, seed=(args.seed, args.trial, NOISE_STREAM))
    write_matrix_csv(args.out, X)
    print(f"{X.shape[1]} signals on {X.shape[0]} nodes -> {args.out}")
    return EXIT_OK


@monitor
def _learn(args) -> int:
    if args.data:
        z = pairwise_distances(read_matrix_csv(args.data))
    else:
        z = read_edge_list(args.distances)
    m = node_count(z.size)
    config = SolverConfig(alpha=args.alpha, beta=args.beta, s=float(m) if args.scale is None else args.scale,
                          gamma=args.gamma, tol=args.tol, max_iter=args.max_iter, track_objective=False,
                          sigma=args.sigma, k=args.k)
    result = learn(z, config, args.model)
    write_edge_list(args.out, result.w)
    summary = {**result.summary(), "weights_path": args.out, "seed": args.seed}
    if args.result:
        write_json(args.result, summary)
    print(json.dumps(summary))
    return EXIT_OK


def _evaluate(args) -> int:
    report = evaluate(read_edge_list(args.learned), read_edge_list(args.truth), args.rel_threshold)
    if args.out and args.out.endswith(".csv"):
        write_table_csv(args.out, pd.DataFrame([report.to_dict()]))
    elif args.out:
        write_json(args.out, report.to_dict())
    print(json.dumps(report.to_dict()))
    return EXIT_OK


@monitor
def _experiment(args) -> int:
    spec = ExperimentSpec.from_json(args.config)
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if overrides:
        spec = ExperimentSpec.from_dict({**spec.to_dict(), **overrides})
    records = run_experiment(spec, out_dir=args.out_dir, max_workers=args.workers, executor=args.executor)
    print(results_table(records).to_string(float_format=lambda v: f"{v:.3f}"))
    return EXIT_OK


def _norms_check(args) -> int:
    if args.m < 2 or args.n < 1:
        raise ValidationError(f"norms-check needs m >= 2 and n >= 1, got m={args.m}, n={args.n}")
    rng = make_rng(args.seed)
    X = rng.standard_normal((args.m, args.n))
    size = args.m * (args.m - 1) // 2
    w = rng.uniform(size=size) * (rng.uniform(size=size) < 0.5)
    w[0] = max(w[0], 0.5)
    residuals = table_identities(X, w)
    failed = [name for name, value in residuals.items() if not value <= args.tol]
    for name, value in residuals.items():
        print(f"{name:<22} {value:.3e} {'FAIL' if name in failed else 'ok'}")
    if failed:
        logger.error(f"Identities above {args.tol:g}: {', '.join(failed)}")
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the ``smoothgraph`` command; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.log_file)
    try:
        return args.handler(args)
    except ValidationError as e:
        logger.debug("Command failed", exc_info=True)
        print(f"smoothgraph: error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SmoothGraphError, OSError) as e:
        logger.debug("Command failed", exc_info=True)
        print(f"smoothgraph: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
