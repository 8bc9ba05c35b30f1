# fastmu/bench/cli.py

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from fastmu.bench.experiment import ExperimentRunner, load_experiment_config
from fastmu.bench.plotting import emit_plot
from fastmu.bench.tables import load_trace_table
from fastmu.config import Settings
from fastmu.errors import ConfigurationError, NMFError, SolverError
from fastmu.logger import get_logger, set_level
from fastmu.synthetic import generate, problem_to_csv, realized_snr_db

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3  # solver errors, failed cells, unwritable outputs


class CellFailure(SolverError):
    """Some cells of an experiment failed; the artifacts of the others are written."""


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fastmu-bench",
        description="Dense NMF benchmarks: fastMU against MU, HALS, NeNMF and GD baselines.",
    )
    parser.add_argument("--log-level", default=None, help="Overrides NMF_BENCH_LOG_LEVEL (default INFO).")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Write the synthetic problem of a config as CSV files.")
    gen.add_argument("--config", type=Path, required=True, help="Experiment YAML with a problem.synthetic section.")
    gen.add_argument("--out", type=Path, required=True, help="Output directory.")
    gen.add_argument("--seeds", type=int, default=None, help="Number of realizations, one sub-directory each.")

    for name, text in (
        ("run", "Run the algorithm roster over all seeds."),
        ("sweep-delta", "Run every algorithm over the sweep.delta grid."),
        ("nls", "Solve the H subproblem with W held fixed."),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, required=True, help="Experiment YAML.")
        p.add_argument("--timed", action="store_true", help="Run cells one at a time for clean wall-clock traces.")

    plot = sub.add_parser("plot", help="Render a trace CSV as an SVG convergence plot.")
    plot.add_argument("--csv", type=Path, required=True, help="traces.csv or traces_iter.csv")
    plot.add_argument("--x", choices=["time", "iter"], default="iter")
    plot.add_argument("--out", type=Path, default=None, help="SVG path (default: next to the CSV).")
    plot.add_argument(
        "--median",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="Plot the median over seeds; --no-median plots a single seed.",
    )
    plot.add_argument("--seed", type=int, default=0, help="Seed plotted with --no-median.")
    return parser


def _cmd_gen(args: argparse.Namespace) -> str:
    config = load_experiment_config(args.config)
    synthetic = config.problem.synthetic
    if synthetic is None:
        raise ConfigurationError(f"{args.config}: gen needs a problem.synthetic section")
    if args.seeds is not None and args.seeds < 1:
        raise ConfigurationError(f"--seeds must be >= 1, got {args.seeds}")

    indices = range(args.seeds or 1)
    for p in indices:
        problem = generate(synthetic.to_spec(p))
        target = args.out if args.seeds is None else args.out / f"seed_{p}"
        problem_to_csv(problem, target)
        logger.info("wrote %s (seed %d, sigma %.3e, realized SNR %.2f dB)",
                    target, problem.spec.seed, problem.sigma, realized_snr_db(problem))
    return f"wrote {len(indices)} problem(s) under {args.out}"


def _cmd_experiment(args: argparse.Namespace, settings: Settings) -> str:
    config = load_experiment_config(args.config)
    runner = ExperimentRunner(
        config=config,
        mode="nls" if args.command == "nls" else "nmf",
        sweep=args.command == "sweep-delta",
        settings=settings,
        timed=True if args.timed else None,
    )
    table = runner.run()
    failures = runner.failures
    if failures:
        first = failures[0]
        raise CellFailure(
            f"{len(failures)} of {len(runner.results)} cell(s) failed, first {first.cell.label} "
            f"seed {first.cell.seed_index}: {first.error}"
        )
    return f"{len(table)} trace rows written to {config.experiment.output_dir}"


def _cmd_plot(args: argparse.Namespace) -> str:
    table = load_trace_table(args.csv)
    if not args.median:
        table = table[table["seed"] == args.seed]
        if table.empty:
            raise ConfigurationError(f"{args.csv}: no rows for seed {args.seed}")
    out = args.out or args.csv.with_name(f"{args.csv.stem}_{args.x}.svg")
    emit_plot(table, args.x, out)
    return f"plot written to {out}"


def main(argv: Optional[List[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        settings = Settings.from_env()
        set_level(args.log_level or settings.log_level)
        if args.command == "gen":
            message = _cmd_gen(args)
        elif args.command == "plot":
            message = _cmd_plot(args)
        else:
            message = _cmd_experiment(args, settings)
    except ConfigurationError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except NMFError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_SOLVER
    except OSError as exc:
        logger.error("i/o error: %s", exc)
        return EXIT_SOLVER
    print(message)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
