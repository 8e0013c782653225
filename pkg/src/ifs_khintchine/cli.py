"""
Command-line interface for the IFS Khintchine experiments.
"""

import argparse
import logging
import os
import sys
import time
from typing import Any, Dict, List, Optional

from .config import EXPERIMENT_PARAMETERS, NEEDS_IFS, create_config
from .errors import IfsKhintchineError, ValidationError
from .formatters.factory import get_available_formats
from .runner import run_config

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

FLAGS = {"ignore_diameter"}

HELP = {
    "dim": "Similarity dimension or Bowen pressure bracket",
    "khintchine": "Divergence partial sums and limsup hit statistics",
    "example21": "Hoeffding ledger and windowed hit shares for the (3/4, 1/4) system",
    "example22": "Restricted versus global sums for the cylinder-dependent radius rule",
    "leadingblock": "Scan or construct a leading-block coding",
    "masstransfer": "Critical exponent of rescaled cover sums",
    "mahler": "Rational orbit heights and approximation exponents",
    "quadratic": "Quadratic orbit heights under x -> 1/(x + i)",
    "overlap": "Exact overlaps and the resulting dimension drop",
}


def _common_arguments() -> argparse.ArgumentParser:
    """Global flags, accepted before or after the subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=argparse.SUPPRESS,
                        help="Path to a YAML configuration file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="Random seed (default: 0)")
    common.add_argument("--out", type=str, default=argparse.SUPPRESS,
                        help="Output file path (default: results/<experiment>.<ext>)")
    common.add_argument("--format", choices=get_available_formats(), default=argparse.SUPPRESS,
                        help="Output format (default: csv)")
    common.add_argument("--budget-words", type=int, default=argparse.SUPPRESS,
                        help="Largest number of words enumerated at once")
    common.add_argument("--budget-samples", type=int, default=argparse.SUPPRESS,
                        help="Largest number of Monte-Carlo samples")
    common.add_argument("--budget-pressure", type=int, default=argparse.SUPPRESS,
                        help="Words per pressure surrogate; sets the default Bowen level")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="Enable verbose logging")
    return common


def setup_argparser() -> argparse.ArgumentParser:
    """Create and configure the argument parser."""
    common = _common_arguments()
    parser = argparse.ArgumentParser(
        prog="ifs-khintchine",
        description="Khintchine-type experiments on iterated function systems",
        parents=[common],
    )
    subparsers = parser.add_subparsers(dest="experiment")
    for name, schema in EXPERIMENT_PARAMETERS.items():
        sub = subparsers.add_parser(name, help=HELP[name], parents=[common])
        sub.add_argument("--preset", type=str, default=None,
                         help="Shipped IFS preset" + (" (required without an ifs section)"
                                                      if name in NEEDS_IFS else ""))
        for param, (_, default) in schema.items():
            option = "--" + param.replace("_", "-")
            if param in FLAGS:
                sub.add_argument(option, dest=param, action="store_true", default=None)
            else:
                sub.add_argument(option, dest=param, type=str, default=None,
                                 help=f"default: {default}")
    return parser


def build_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Translate parsed arguments into a config override mapping."""
    options = vars(args)
    overrides: Dict[str, Any] = {
        "seed": options.get("seed"),
        "format": options.get("format"),
        "out": options.get("out"),
        "budgets": {
            "words": options.get("budget_words"),
            "samples": options.get("budget_samples"),
            "pressure": options.get("budget_pressure"),
        },
    }
    experiment = options.get("experiment")
    if experiment:
        overrides["experiment"] = experiment
        overrides["preset"] = options.get("preset")
        overrides["experiments"] = []
        overrides[experiment] = {
            param: options.get(param) for param in EXPERIMENT_PARAMETERS[experiment]
        }
    return overrides


def main(argv: Optional[List[str]] = None) -> None:
    """Main entry point for the CLI."""
    parser = setup_argparser()
    args = parser.parse_args(argv)
    verbose = getattr(args, "verbose", False)

    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    config_file = getattr(args, "config", None)
    try:
        if config_file is not None and not os.path.isfile(config_file):
            raise ValidationError(f"config file {config_file} does not exist", "config")
        config = create_config(
            config_file=config_file,
            env_vars=True,
            **build_overrides(args),
        )
        config.validate()
        started = time.perf_counter()
        written = run_config(config)
        elapsed = time.perf_counter() - started
    except IfsKhintchineError as e:
        logger.error(f"{type(e).__name__}: {e}")
        sys.exit(e.exit_code)
    except OSError as e:
        logger.error(f"Cannot write results: {e}")
        sys.exit(2)
    except Exception as e:
        logger.error(f"Error: {str(e)}")
        if verbose:
            logger.exception("Detailed error:")
        sys.exit(4)

    for out, paths in written.items():
        logger.info(f"Results for {out}: {', '.join(paths)}")
    if config.experiment == "dim" or any(e.experiment == "dim" for e in config.experiments):
        print(f"runtime: {elapsed:.6f} s")
    sys.exit(0)


if __name__ == "__main__":
    main()
