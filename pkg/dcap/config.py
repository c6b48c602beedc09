"""
Configuration defaults and parsing for dcap.
"""

import argparse
import os
from dataclasses import dataclass
from typing import Optional, Tuple

DEFAULT_P = 5
DEFAULT_DEG_CAP = 32
DEFAULT_OP_CAP = 16
DEFAULT_LEVELS = 4
DEFAULT_LADDER = (32, 64, 128)

SEED_ENV = "DCAP_SEED"


@dataclass
class Config:
    """Runtime configuration. Field overrides left as None defer to the scenario."""

    scenario: Optional[str] = None
    out: Optional[str] = None
    p: Optional[int] = None
    deg_cap: Optional[int] = None
    op_cap: Optional[int] = None
    levels: Optional[int] = None
    ladder: Optional[Tuple[int, ...]] = None
    validate: bool = False
    list_builtins: bool = False
    seed: int = 0
    debug: bool = False


def parse_ladder(text: str) -> Tuple[int, ...]:
    """'32,64,128' -> (32, 64, 128); strictly increasing positive caps."""
    try:
        caps = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"ladder must be integers: {text!r}")
    if not caps:
        raise argparse.ArgumentTypeError("ladder needs at least one cap")
    if caps[0] < 1 or any(a >= b for a, b in zip(caps, caps[1:])):
        raise argparse.ArgumentTypeError(
            f"ladder must be positive and strictly increasing: {text!r}"
        )
    return caps


def seed_from_env(default: int = 0) -> int:
    value = os.environ.get(SEED_ENV)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        return default


def parse_args(args: Optional[list] = None) -> Config:
    """Parse command-line arguments into Config."""
    parser = argparse.ArgumentParser(
        description="Run p-adic D-module scenarios and write JSON reports."
    )
    parser.add_argument(
        "--scenario",
        default=None,
        help="Scenario JSON file, or the name of a built-in scenario",
    )
    parser.add_argument(
        "--out",
        default=None,
        help="Report path (default: the scenario's 'out', else stdout)",
    )
    parser.add_argument(
        "--p",
        type=int,
        default=None,
        help=f"Prime p of the base field (default: {DEFAULT_P})",
    )
    parser.add_argument(
        "--deg-cap",
        type=int,
        default=None,
        help=f"Series degree cap D (default: {DEFAULT_DEG_CAP})",
    )
    parser.add_argument(
        "--op-cap",
        type=int,
        default=None,
        help=f"Operator order cap (default: {DEFAULT_OP_CAP})",
    )
    parser.add_argument(
        "--levels",
        type=int,
        default=None,
        help=f"Largest level n_max (default: {DEFAULT_LEVELS})",
    )
    parser.add_argument(
        "--ladder",
        type=parse_ladder,
        default=None,
        help="Comma-separated increasing caps (default: 32,64,128)",
    )
    parser.add_argument(
        "--validate",
        action="store_true",
        help="Check the scenario file only; no computation",
    )
    parser.add_argument(
        "--list",
        dest="list_builtins",
        action="store_true",
        help="List operations, built-in coverings and example scenarios",
    )
    parser.add_argument(
        "--debug",
        action="store_true",
        help="Enable debug logging",
    )
    parsed = parser.parse_args(args)
    return Config(
        scenario=parsed.scenario,
        out=parsed.out,
        p=parsed.p,
        deg_cap=parsed.deg_cap,
        op_cap=parsed.op_cap,
        levels=parsed.levels,
        ladder=parsed.ladder,
        validate=parsed.validate,
        list_builtins=parsed.list_builtins,
        seed=seed_from_env(),
        debug=parsed.debug,
    )
