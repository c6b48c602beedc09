#!/usr/bin/env python3
"""
LibFuzzer harness for scenario validation (validate_data, Scenario.from_dict).

Feed raw bytes as one JSON object. Validation must either accept the scenario or
return diagnostics; from_dict must agree with it.
Run: python fuzz/fuzz_scenario.py fuzz/corpus/scenario/ [options]
"""

import json
import sys

try:
    import atheris
except ImportError:
    print("Install atheris: pip install atheris")
    sys.exit(1)

with atheris.instrument_imports():
    from dcap.scenario import (
        Scenario,
        ScenarioError,
        UnknownOperationError,
        validate_data,
    )


def test_one_input(data: bytes) -> None:
    """Single fuzz iteration: validate decoded JSON and build the scenario."""
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError, RecursionError):
        return
    problems = validate_data(obj)
    assert all(isinstance(p, str) for p in problems)
    try:
        scenario = Scenario.from_dict(obj)
    except (ScenarioError, UnknownOperationError):
        assert problems
        return
    assert not problems
    assert validate_data(scenario.to_dict()) == []


def main() -> None:
    atheris.Setup(sys.argv, test_one_input)
    atheris.Fuzz()


if __name__ == "__main__":
    main()
