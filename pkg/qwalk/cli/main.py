"""Command-line entry point."""

import argparse
import sys
from typing import Optional, Sequence

from qwalk.cli.run import cmd_multiprog, cmd_run
from qwalk.cli.tools import cmd_maps, cmd_oracle, cmd_schedules, cmd_score_map, cmd_synthesize
from qwalk.core.config import settings
from qwalk.core.exceptions import EXIT_RUNTIME, QWalkException
from qwalk.core.logging import get_logger, setup_logging
from qwalk.models.schedule import DECREASING_KINDS, INCREASING_KINDS

logger = get_logger(__name__)


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="Experiment suite JSON")
    parser.add_argument("--out", default=None, help="Output directory (default: the suite's output_dir)")
    parser.add_argument("--seed", type=int, default=None, help="Run this single seed instead of the suite's")
    parser.add_argument("--shots", type=int, default=None, help="Override shots per evaluation")
    parser.add_argument("--parallel", type=int, default=None, help="Seeds run in parallel threads")


def _add_circuit_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--device", required=True, help="Bundled name, synthetic:... spec, or snapshot path")
    parser.add_argument("--qubits", type=int, required=True, help="EfficientSU2 width")
    parser.add_argument("--reps", type=int, default=3, help="EfficientSU2 repetitions")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qwalk", description="Fidelity-aware qubit walks for variational algorithms")
    parser.add_argument("--log-level", default=None, help=f"Logging level (default {settings.log_level})")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment suite")
    _add_experiment_flags(run)
    run.set_defaults(handler=cmd_run)

    multiprog = sub.add_parser("multiprog", help="Throughput and gap against concurrency k")
    _add_experiment_flags(multiprog)
    multiprog.add_argument("--k", type=int, default=3, help="Largest concurrency level")
    multiprog.set_defaults(handler=cmd_multiprog)

    schedules = sub.add_parser("schedules", help="Print an ESP schedule as CSV")
    schedules.add_argument("kind", choices=INCREASING_KINDS + DECREASING_KINDS)
    schedules.add_argument("--sigma-min", type=float, required=True)
    schedules.add_argument("--sigma-max", type=float, required=True)
    schedules.add_argument("--T", type=int, default=settings.cycles * settings.iters_per_cycle)
    schedules.add_argument("--alpha", type=float, default=settings.alpha)
    schedules.add_argument("--beta", type=float, default=settings.beta)
    schedules.add_argument("--gamma", type=float, default=settings.gamma)
    schedules.set_defaults(handler=cmd_schedules)

    oracle = sub.add_parser("oracle", help="Exact ground energy or maximum cut")
    source = oracle.add_mutually_exclusive_group(required=True)
    source.add_argument("--hamiltonian", help="Bundled name or Hamiltonian file")
    source.add_argument("--graph", help="Graph edge-list file")
    oracle.set_defaults(handler=cmd_oracle)

    maps = sub.add_parser("maps", help="List seed maps with their ESP")
    _add_circuit_flags(maps)
    maps.add_argument("--exclude", default="", help="Comma-separated physical qubits to avoid")
    maps.set_defaults(handler=cmd_maps)

    score = sub.add_parser("score-map", help="ESP of one map")
    _add_circuit_flags(score)
    score.add_argument("--map", required=True, help="Comma-separated physical qubits, logical order")
    score.set_defaults(handler=cmd_score_map)

    synthesize = sub.add_parser("synthesize", help="Write a synthetic device snapshot")
    synthesize.add_argument("ref", help="e.g. synthetic:heavy-hex-27:seed=7,correlation=0.5")
    synthesize.add_argument("--out", required=True)
    synthesize.set_defaults(handler=cmd_synthesize)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except QWalkException as e:
        logger.error(f"{type(e).__name__}: {e.message}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected error: {str(e)}", exc_info=True)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
