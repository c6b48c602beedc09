#!/usr/bin/env python3
"""
LibFuzzer harness for the series and operator text formats.

Feed raw bytes as UTF-8 text: 'p=5; vars=x; deg<=8; 1 + x/5' or '(x)*d1^2 + 3'.
Parsed values must survive a print/parse round trip.
Run: python fuzz/fuzz_textfmt.py fuzz/corpus/textfmt/ [options]
"""

import sys

try:
    import atheris
except ImportError:
    print("Install atheris: pip install atheris")
    sys.exit(1)

with atheris.instrument_imports():
    from dcap.textfmt import (
        operator_to_text,
        parse_operator,
        parse_series,
        series_to_text,
    )


def test_one_input(data: bytes) -> None:
    """Single fuzz iteration: parse as series, then as operator."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        return
    if len(text) > 256:
        return
    try:
        f = parse_series(text)
    except ValueError:
        f = None
    if f is not None:
        assert parse_series(series_to_text(f)) == f
    try:
        P = parse_operator(text)
    except ValueError:
        return
    assert parse_operator(operator_to_text(P), P.field, P.nvars) == P


def main() -> None:
    atheris.Setup(sys.argv, test_one_input)
    atheris.Fuzz()


if __name__ == "__main__":
    main()
