import json
import logging
import os
from argparse import Namespace
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Optional

from constants import (
    DEFAULT_DELTA,
    DEFAULT_DEPTH,
    DEFAULT_EPSILON,
    DEFAULT_EXPANSION_POINT,
    DEFAULT_GAMMA,
    DEFAULT_ORDER,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_TMAX,
    OUTPUT_ENV_VAR,
)
from utils.scalars import BACKENDS, EXACT, FLOAT, Scalar

logger = logging.getLogger(__name__)

COMMANDS = (
    "riccati",
    "linear-repro",
    "table1",
    "fig1",
    "fig2",
    "fig3",
    "nonlinear-coverage",
    "moments",
)
SEED_FAMILIES = ("constant", "power", "inverse-factorial")
# first entry is the default when --backend is not given
BACKEND_SUPPORT = {
    "riccati": (EXACT,),
    "linear-repro": (EXACT, FLOAT),
    "table1": (EXACT,),
    "fig1": (FLOAT,),
    "fig2": (FLOAT,),
    "fig3": (EXACT, FLOAT),
    "nonlinear-coverage": (EXACT, FLOAT),
    "moments": (EXACT,),
}


def parse_scalar(text: Any) -> Scalar:
    """Rational literals ("1/3", "2") stay exact; anything else becomes a float."""
    if isinstance(text, (int, float, Fraction)) and not isinstance(text, bool):
        return text
    text = str(text).strip()
    try:
        return Fraction(text)
    except ValueError:
        return float(text)


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV_VAR, DEFAULT_OUTPUT_DIR))


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of one experiment run."""

    command: str
    depth: int = DEFAULT_DEPTH
    order: int = DEFAULT_ORDER
    epsilon: Scalar = DEFAULT_EPSILON
    gamma: Scalar = DEFAULT_GAMMA
    delta: Scalar = DEFAULT_DELTA
    a: Scalar = DEFAULT_EXPANSION_POINT
    tmax: float = DEFAULT_TMAX
    backend: Optional[str] = None
    seed_family: str = "constant"
    out: Path = Path(DEFAULT_OUTPUT_DIR)
    verbose: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command: {self.command}")
        if self.backend is None:
            object.__setattr__(self, "backend", BACKEND_SUPPORT[self.command][0])
        elif self.backend not in BACKENDS:
            raise ValueError(f"unknown backend: {self.backend}")
        elif self.backend not in BACKEND_SUPPORT[self.command]:
            raise ValueError(f"{self.command} supports the backends "
                             f"{', '.join(BACKEND_SUPPORT[self.command])}, not {self.backend}")
        if self.seed_family not in SEED_FAMILIES:
            raise ValueError(f"unknown seed family: {self.seed_family}")
        if self.depth < 1 or self.order < 1:
            raise ValueError("depth and order must be positive")
        object.__setattr__(self, "out", Path(self.out))

    @classmethod
    def from_namespace(cls, args: Namespace) -> "ExperimentConfig":
        """Build from parsed flags, then apply the --config file when given."""
        config = cls(
            command=args.command,
            depth=args.depth,
            order=args.order,
            epsilon=parse_scalar(args.epsilon),
            gamma=parse_scalar(args.gamma),
            delta=parse_scalar(args.delta),
            a=parse_scalar(args.a),
            tmax=float(args.tmax),
            backend=args.backend,
            seed_family=args.seed_family,
            out=Path(args.out) if args.out else default_output_dir(),
            verbose=args.verbose,
        )
        if getattr(args, "config", None):
            config = config.with_overrides(load_overrides(args.config))
        return config

    def with_overrides(self, overrides: Mapping[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values = {}
        for key, value in overrides.items():
            if key in ("epsilon", "gamma", "delta", "a"):
                value = parse_scalar(value)
            elif key == "out":
                value = Path(value)
            values[key] = value
        logger.debug("config overrides: %s", sorted(values))
        return replace(self, **values)

    @property
    def seed_family_key(self) -> str:
        return self.seed_family.replace("-", "_")


def load_overrides(path: Optional[str]) -> dict:
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data
