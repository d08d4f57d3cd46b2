import argparse
import sys

from cli.config import COMMANDS, SEED_FAMILIES, ExperimentConfig
from cli.experiments import run
from constants import (
    DEFAULT_DELTA,
    DEFAULT_DEPTH,
    DEFAULT_EPSILON,
    DEFAULT_EXPANSION_POINT,
    DEFAULT_GAMMA,
    DEFAULT_ORDER,
    DEFAULT_TMAX,
    EXIT_USAGE,
    EXIT_VALIDATION,
    OUTPUT_ENV_VAR,
)
from utils.log import configure_logging
from utils.scalars import BACKENDS


class UsageParser(argparse.ArgumentParser):
    """Exits with the usage code instead of argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(prog="hierarchy-forge",
                         description="Experiments on infinite forward-recursive ODE hierarchies.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--depth", type=int, default=DEFAULT_DEPTH, help="number of levels N")
    parser.add_argument("--order", type=int, default=DEFAULT_ORDER, help="truncation order K")
    parser.add_argument("--epsilon", default=str(DEFAULT_EPSILON))
    parser.add_argument("--gamma", default=str(DEFAULT_GAMMA))
    parser.add_argument("--delta", default=str(DEFAULT_DELTA))
    parser.add_argument("--a", default=str(DEFAULT_EXPANSION_POINT), help="expansion point")
    parser.add_argument("--tmax", type=float, default=DEFAULT_TMAX)
    parser.add_argument("--backend", choices=BACKENDS, default=None,
                        help="exact or float (default: the command's preferred backend)")
    parser.add_argument("--seed-family", choices=SEED_FAMILIES, default="constant")
    parser.add_argument("--out", default=None, help=f"output directory (default: ${OUTPUT_ENV_VAR} or ./out)")
    parser.add_argument("--config", default=None, help="JSON file of setting overrides")
    parser.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        config = ExperimentConfig.from_namespace(args)
    except (ValueError, OSError) as error:
        sys.stderr.write(f"invalid settings: {error}\n")
        return EXIT_VALIDATION
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
