"""Command-line entry point.

Exit codes: 0 success, 2 unusable input (files, flags, dates), 1 anything else.
"""
import argparse
import logging
from datetime import date
from pathlib import Path
from typing import List, Optional, Sequence

from ..core.errors import ShiftwiseError, UserInputError
from ..evaluation.synthetic import SyntheticConfig
from ..utils.constants import (
    APP_TITLE, APP_VERSION, COST_UNIT_SCALES, DEFAULT_AVAILABILITY_THRESHOLD, DEFAULT_TOLERANCE,
    DEFAULT_USAGE_THRESHOLD, MSE_VARIANTS, SAVINGS_SCOPES, STABILITY_MODES,
)
from ..utils.logging_config import configure_logging
from ..utils.settings import RunConfig
from . import commands

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USER_ERROR = 2


def iso_date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got '{text}'") from e


def threshold_grid(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from e


def _common(parser: argparse.ArgumentParser, multiple_configs: bool = False) -> None:
    parser.add_argument("--config", type=Path, action="append" if multiple_configs else "store",
                        required=True, metavar="PATH", help="household configuration JSON")
    parser.add_argument("--out", type=Path, default=Path("out"), metavar="DIR",
                        help="output directory (default: out)")
    parser.add_argument("--cache-dir", type=Path, default=None, metavar="DIR",
                        help="prepared-data cache (default: $SHIFTWISE_CACHE_DIR or ./cache)")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings only, no progress bars")


def _thresholds(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--availability-th", type=float, default=DEFAULT_AVAILABILITY_THRESHOLD,
                        help=f"availability threshold t_U (default {DEFAULT_AVAILABILITY_THRESHOLD})")
    parser.add_argument("--usage-th", type=float, default=DEFAULT_USAGE_THRESHOLD,
                        help=f"usage threshold t_S (default {DEFAULT_USAGE_THRESHOLD})")
    parser.add_argument("--cost-unit", choices=sorted(COST_UNIT_SCALES), default="raw",
                        help="raw price x Wh products, or currency (divided by 1e6)")


def _evaluation(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--from", dest="start", type=iso_date, default=None, metavar="YYYY-MM-DD")
    parser.add_argument("--to", dest="end", type=iso_date, default=None, metavar="YYYY-MM-DD")
    parser.add_argument("--savings-scope", choices=SAVINGS_SCOPES, default="all",
                        help="sum savings over all final recommendations or acceptable ones only")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=APP_TITLE,
                                     description="Load-shifting recommendations and their evaluation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    ingest = subparsers.add_parser("ingest", help="parse raw files and cache the prepared household")
    _common(ingest, multiple_configs=True)

    recommend = subparsers.add_parser("recommend", help="recommendations for one day")
    _common(recommend)
    recommend.add_argument("--date", type=iso_date, required=True, metavar="YYYY-MM-DD")
    _thresholds(recommend)

    evaluate = subparsers.add_parser("evaluate", help="pipeline sweep, agent scores and savings")
    _common(evaluate, multiple_configs=True)
    _thresholds(evaluate)
    _evaluation(evaluate)
    evaluate.add_argument("--mse-variant", choices=MSE_VARIANTS, default="mean",
                          help="per-run squared error divided by its k+1 hours (mean), "
                               "or by k hours (literal, k+1 when k is 0)")

    coldstart = subparsers.add_parser("coldstart", help="days of history each agent needs")
    _common(coldstart, multiple_configs=True)
    coldstart.add_argument("--tolerance", dest="tolerances", type=float, nargs="+", default=None, metavar="TOL",
                           help=f"stability tolerance, several values rescan the same curves "
                                f"(default {DEFAULT_TOLERANCE})")
    coldstart.add_argument("--step", type=int, default=1, help="evaluate every N-th training length")
    coldstart.add_argument("--stability", choices=STABILITY_MODES, default="absolute")
    coldstart.add_argument("--jobs", type=int, default=1, help="worker processes")

    gridsearch = subparsers.add_parser("gridsearch", help="threshold sensitivity and best thresholds")
    _common(gridsearch, multiple_configs=True)
    _thresholds(gridsearch)
    _evaluation(gridsearch)
    gridsearch.add_argument("--availability-grid", type=threshold_grid, default=None, metavar="A,B,...")
    gridsearch.add_argument("--usage-grid", type=threshold_grid, default=None, metavar="A,B,...")
    gridsearch.add_argument("--plots", action="store_true", help="write PNG heatmaps and timing histogram")

    synth = subparsers.add_parser("synth", help="generate a synthetic household with known outcomes")
    synth.add_argument("--out", type=Path, default=Path("out"), metavar="DIR")
    synth.add_argument("--cache-dir", type=Path, default=None, metavar="DIR")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--days", type=int, default=365)
    synth.add_argument("--availability-noise", type=float, default=0.0)
    synth.add_argument("--usage-probability", type=float, default=1.0)
    synth.add_argument("--evaluate", action="store_true", help="also ingest, evaluate and compare")
    _thresholds(synth)
    synth.add_argument("-v", "--verbose", action="count", default=0)
    synth.add_argument("-q", "--quiet", action="store_true")
    return parser


def run_config(args: argparse.Namespace) -> RunConfig:
    """Validated RunConfig from parsed arguments; absent flags keep their defaults."""
    configs = args.config if isinstance(getattr(args, "config", None), list) else [getattr(args, "config", None)]
    run = RunConfig(configs=tuple(Path(p) for p in configs if p is not None), out=args.out,
                    cache_dir=args.cache_dir, progress=not args.quiet)
    for flag, field_name in (("start", "start"), ("end", "end"), ("availability_th", "availability_th"),
                             ("usage_th", "usage_th"), ("seed", "seed"),
                             ("jobs", "jobs"), ("step", "cold_start_step"), ("plots", "plots"),
                             ("cost_unit", "cost_unit"), ("mse_variant", "mse_variant"),
                             ("savings_scope", "savings_scope"), ("stability", "stability")):
        if (value := getattr(args, flag, None)) is not None:
            setattr(run, field_name, value)
    if getattr(args, "availability_grid", None):
        run.availability_grid = tuple(args.availability_grid)
    if getattr(args, "tolerances", None):
        run.tolerances = tuple(args.tolerances)
    if getattr(args, "usage_grid", None):
        run.usage_grid = tuple(args.usage_grid)
    return run.validate()


def dispatch(args: argparse.Namespace) -> int:
    run = run_config(args)
    if args.command == "ingest":
        return commands.cmd_ingest(run)
    if args.command == "recommend":
        return commands.cmd_recommend(run, args.date)
    if args.command == "evaluate":
        return commands.cmd_evaluate(run)
    if args.command == "coldstart":
        return commands.cmd_coldstart(run)
    if args.command == "gridsearch":
        return commands.cmd_gridsearch(run)
    synthetic = SyntheticConfig(days=args.days, seed=run.seed, availability_noise=args.availability_noise,
                                usage_probability=args.usage_probability)
    return commands.cmd_synth(run, synthetic, evaluate=args.evaluate)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(-1 if args.quiet else args.verbose)
    try:
        return dispatch(args)
    except UserInputError as e:
        logger.error(str(e))
        return EXIT_USER_ERROR
    except ShiftwiseError as e:
        logger.error(str(e))
        return EXIT_FAILURE
    except Exception:
        logger.exception("Unexpected error")
        return EXIT_FAILURE
