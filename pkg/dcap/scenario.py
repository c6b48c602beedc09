"""
Scenario files: JSON load, schema validation and module specs.

A scenario names one operation and its inputs:

    {"op": "derham", "field": {"p": 5, "ladder": [32, 64, 128]},
     "module": {"vars": 1, "rank": 1, "theta": [[["1"]]]},
     "caps": {"deg": 32}, "params": {}, "out": "report.json"}

"functor" is accepted as an alias of "op".
"""

import json
import logging
from dataclasses import dataclass
from dataclasses import field as dc_field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from sympy import isprime

from dcap.config import (
    DEFAULT_DEG_CAP,
    DEFAULT_LADDER,
    DEFAULT_LEVELS,
    DEFAULT_OP_CAP,
    DEFAULT_P,
    Config,
)
from dcap.diffop import DiffOp
from dcap.dmods import ConnectionModule
from dcap.padic import GlobalField
from dcap.textfmt import default_vars, parse_operator, parse_series

logger = logging.getLogger(__name__)

OPERATIONS = (
    "cech_disk",
    "coadmissibility",
    "derham",
    "division",
    "dual",
    "f_shriek",
    "i_nat",
    "i_plus",
    "kashiwara_roundtrip",
    "limit_cokernel",
    "prenuclear",
    "roos",
    "side_change",
    "spencer",
    "strictness",
    "tensor",
)

BUILTIN_DIR = Path(__file__).resolve().parent / "scenarios"

_TOP_KEYS = {"op", "functor", "field", "module", "modules", "caps", "params", "out"}
_FIELD_KEYS = {"p", "deg_cap", "op_cap", "levels", "ladder"}


class ScenarioError(ValueError):
    """A scenario file that does not parse or validate."""

    def __init__(self, message: str, diagnostics: Optional[List[str]] = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or [message]


class UnknownOperationError(KeyError):
    """An operation name with no registered runner."""


@dataclass
class Scenario:
    """A validated scenario."""

    op: str
    field: Dict[str, Any] = dc_field(default_factory=dict)
    module: Optional[Dict[str, Any]] = None
    modules: List[Dict[str, Any]] = dc_field(default_factory=list)
    caps: Dict[str, int] = dc_field(default_factory=dict)
    params: Dict[str, Any] = dc_field(default_factory=dict)
    out: Optional[str] = None
    source: Optional[str] = None

    def to_dict(self) -> dict:
        data: Dict[str, Any] = {"op": self.op}
        for key in ("field", "module", "modules", "caps", "params", "out"):
            value = getattr(self, key)
            if value:
                data[key] = value
        return data

    @classmethod
    def from_dict(cls, data: object, source: Optional[str] = None) -> "Scenario":
        problems = validate_data(data)
        if problems:
            unknown = [p for p in problems if p.startswith("op: unknown operation")]
            if isinstance(data, dict) and unknown == problems:
                raise UnknownOperationError(data.get("op", data.get("functor")))
            raise ScenarioError("; ".join(problems), problems)
        assert isinstance(data, dict)
        return cls(
            op=data.get("op", data.get("functor")),
            field=dict(data.get("field", {})),
            module=data.get("module"),
            modules=list(data.get("modules", [])),
            caps=dict(data.get("caps", {})),
            params=dict(data.get("params", {})),
            out=data.get("out"),
            source=source,
        )


def _positive_int(value: object) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value >= 1


def _validate_module(spec: object, where: str, nvars_hint: int = 1) -> List[str]:
    if not isinstance(spec, dict):
        return [f"{where}: must be an object"]
    if "cyclic" in spec:
        text = spec["cyclic"]
        if not isinstance(text, str):
            return [f"{where}.cyclic: must be operator text"]
        try:
            parse_operator(text)
        except ValueError as e:
            return [f"{where}.cyclic: {e}"]
        level = spec.get("level", 0)
        if not isinstance(level, int) or isinstance(level, bool) or level < 0:
            return [f"{where}.level: must be an integer >= 0"]
        return []
    if "fiber_dim" in spec:
        dim = spec["fiber_dim"]
        if not isinstance(dim, int) or isinstance(dim, bool) or dim < 0:
            return [f"{where}.fiber_dim: must be an integer >= 0"]
        return []
    nvars = spec.get("vars", nvars_hint)
    rank = spec.get("rank", 1)
    if not _positive_int(nvars) or nvars > 2:
        return [f"{where}.vars: must be 1 or 2"]
    if not isinstance(rank, int) or isinstance(rank, bool) or rank < 0:
        return [f"{where}.rank: must be an integer >= 0"]
    theta = spec.get("theta")
    if theta is None:
        return []
    if not isinstance(theta, list) or len(theta) != nvars:
        return [f"{where}.theta: needs one matrix per variable"]
    names = default_vars(nvars)
    for i, A in enumerate(theta):
        if not isinstance(A, list) or len(A) != rank:
            return [f"{where}.theta[{i}]: must be a {rank}x{rank} matrix"]
        for row in A:
            if not isinstance(row, list) or len(row) != rank:
                return [f"{where}.theta[{i}]: must be a {rank}x{rank} matrix"]
            for text in row:
                if not isinstance(text, str):
                    return [f"{where}.theta[{i}]: entries must be series text"]
                try:
                    parse_series(text, names=names)
                except ValueError as e:
                    return [f"{where}.theta[{i}]: {e}"]
    return []


def validate_data(data: object) -> List[str]:
    """Schema diagnostics for decoded scenario JSON; empty when valid."""
    if not isinstance(data, dict):
        return ["scenario: must be a JSON object"]
    problems: List[str] = []
    for key in sorted(set(data) - _TOP_KEYS):
        problems.append(f"{key}: unknown key")
    op = data.get("op", data.get("functor"))
    if op is None:
        problems.append("op: missing")
    elif op not in OPERATIONS:
        allowed = ", ".join(OPERATIONS)
        problems.append(f"op: unknown operation {op!r}; allowed: {allowed}")

    fld = data.get("field", {})
    if not isinstance(fld, dict):
        problems.append("field: must be an object")
        fld = {}
    for key in sorted(set(fld) - _FIELD_KEYS):
        problems.append(f"field.{key}: unknown key")
    if "p" in fld and not (_positive_int(fld["p"]) and isprime(fld["p"])):
        problems.append("field.p: must be a prime")
    for key in ("deg_cap", "op_cap", "levels"):
        if key in fld and not _positive_int(fld[key]):
            problems.append(f"field.{key}: must be a positive integer")
    if "ladder" in fld:
        ladder = fld["ladder"]
        if not isinstance(ladder, list) or not ladder or not all(
            _positive_int(c) for c in ladder
        ):
            problems.append(
                "field.ladder: must be a non-empty list of positive integers"
            )
        elif any(a >= b for a, b in zip(ladder, ladder[1:])):
            problems.append("field.ladder: must be strictly increasing")

    caps = data.get("caps", {})
    if not isinstance(caps, dict):
        problems.append("caps: must be an object")
    else:
        for key, value in sorted(caps.items()):
            if not _positive_int(value):
                problems.append(f"caps.{key}: must be a positive integer")
    if not isinstance(data.get("params", {}), dict):
        problems.append("params: must be an object")
    if "out" in data and not isinstance(data["out"], str):
        problems.append("out: must be a path string")
    if "module" in data:
        problems.extend(_validate_module(data["module"], "module"))
    modules = data.get("modules", [])
    if not isinstance(modules, list):
        problems.append("modules: must be a list")
    else:
        for k, spec in enumerate(modules):
            problems.extend(_validate_module(spec, f"modules[{k}]"))
    return problems


def resolve_path(name: str) -> Path:
    """A file path, or the name of a built-in scenario (with or without .json)."""
    path = Path(name)
    if path.exists():
        return path
    stem = name[:-5] if name.endswith(".json") else name
    builtin = BUILTIN_DIR / f"{stem}.json"
    if builtin.exists():
        return builtin
    return path


def _read_json(path: Path) -> object:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.warning("Scenario load failed %s: %s", path, e)
        raise ScenarioError(f"cannot read scenario {path}: {e}") from e


def load_scenario(name: str) -> Scenario:
    """
    Load and validate a scenario.

    Raises UnknownOperationError when the operation name is the only problem,
    ScenarioError for anything else.
    """
    path = resolve_path(name)
    return Scenario.from_dict(_read_json(path), source=str(path))


def validate_file(name: str) -> List[str]:
    """Diagnostics for a scenario file; no computation."""
    try:
        data = _read_json(resolve_path(name))
    except ScenarioError as e:
        return list(e.diagnostics)
    return validate_data(data)


def builtin_scenarios() -> List[str]:
    return sorted(p.stem for p in BUILTIN_DIR.glob("*.json"))


def resolve_field(
    scenario: Scenario, config: Config
) -> Tuple[GlobalField, Tuple[int, ...]]:
    """Command-line flag > scenario field block > defaults."""
    block = scenario.field

    def pick(flag: Optional[int], key: str, default: int) -> int:
        if flag is not None:
            return flag
        return int(block.get(key, default))

    fld = GlobalField(
        p=pick(config.p, "p", DEFAULT_P),
        deg_cap=pick(config.deg_cap, "deg_cap", DEFAULT_DEG_CAP),
        op_cap=pick(config.op_cap, "op_cap", DEFAULT_OP_CAP),
        n_max=pick(config.levels, "levels", DEFAULT_LEVELS),
    )
    if config.ladder is not None:
        ladder = tuple(config.ladder)
    else:
        ladder = tuple(block.get("ladder", DEFAULT_LADDER))
    return fld, ladder


def module_from_spec(spec: Dict[str, Any], fld: GlobalField) -> ConnectionModule:
    """{"vars": m, "rank": r, "theta": [[[series text]]]}; theta omitted = trivial."""
    nvars = int(spec.get("vars", 1))
    rank = int(spec.get("rank", 1))
    theta = spec.get("theta")
    if theta is None:
        return ConnectionModule.trivial(fld, nvars, rank)
    names = default_vars(nvars)
    matrices = tuple(
        tuple(tuple(parse_series(text, fld, names) for text in row) for row in A)
        for A in theta
    )
    return ConnectionModule(fld, nvars, rank, matrices)


def cyclic_from_spec(spec: Dict[str, Any], fld: GlobalField) -> Tuple[DiffOp, int]:
    """{"cyclic": "operator text", "level": n} -> (P, n)."""
    return parse_operator(spec["cyclic"], fld), int(spec.get("level", 0))


def save_report(path: Path, report: dict) -> bool:
    """Write a report as sorted-key JSON. Returns True on success."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2, sort_keys=True)
            f.write("\n")
        return True
    except OSError as e:
        logger.warning("Report save failed %s: %s", path, e)
        return False
