"""
Batch driver: load a scenario, run its operation over the cap ladder, write a report.
"""

import json
import logging
import sys
from pathlib import Path

from dcap.config import Config, parse_args
from dcap.runner import format_listing, list_builtins, run_scenario
from dcap.scenario import (
    UnknownOperationError,
    load_scenario,
    resolve_field,
    save_report,
    validate_file,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_UNKNOWN_OP = 3


def run(config: Config) -> int:
    """
    Run one scenario.

    Returns exit code: 0 completed (whatever the verdicts), 2 parse or
    validation error, 3 unknown operation, 1 anything else.
    """
    log_level = logging.DEBUG if config.debug else logging.INFO
    logging.basicConfig(
        level=log_level,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    if config.list_builtins:
        print(format_listing(list_builtins()))
        return EXIT_OK
    if not config.scenario:
        logger.error("No scenario given (use --scenario or --list)")
        return EXIT_INVALID

    if config.validate:
        diagnostics = validate_file(config.scenario)
        for line in diagnostics:
            print(line)
        if diagnostics:
            return EXIT_INVALID
        print("OK")
        return EXIT_OK

    try:
        scenario = load_scenario(config.scenario)
        fld, ladder = resolve_field(scenario, config)
    except UnknownOperationError as e:
        logger.error("Unknown operation %s", e)
        return EXIT_UNKNOWN_OP
    except ValueError as e:
        logger.error("Invalid scenario %s: %s", config.scenario, e)
        return EXIT_INVALID

    try:
        report = run_scenario(scenario, fld, ladder, seed=config.seed)
    except UnknownOperationError as e:
        logger.error("Unknown operation %s", e)
        return EXIT_UNKNOWN_OP
    except Exception:
        logger.exception("Operation %s failed", scenario.op)
        return EXIT_FAILURE

    out = config.out or scenario.out
    if out is None:
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return EXIT_OK
    if not save_report(Path(out), report):
        return EXIT_FAILURE
    logger.info("Report written to %s", out)
    return EXIT_OK


def main() -> None:
    """Entry point for the dcap script."""
    config = parse_args()
    sys.exit(run(config))


if __name__ == "__main__":
    main()
