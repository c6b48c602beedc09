"""
Unit tests for config parsing: valid, invalid, and edge cases.
"""

import argparse

import pytest

from dcap.config import SEED_ENV, parse_args, parse_ladder, seed_from_env


class TestParseArgsDefaults:
    """Default values when no args given."""

    def test_empty_args_uses_defaults(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.delenv(SEED_ENV, raising=False)
        config = parse_args([])
        assert config.scenario is None
        assert config.out is None
        assert config.p is None
        assert config.deg_cap is None
        assert config.op_cap is None
        assert config.levels is None
        assert config.ladder is None
        assert config.validate is False
        assert config.list_builtins is False
        assert config.seed == 0
        assert config.debug is False

    def test_help_exits(self) -> None:
        with pytest.raises(SystemExit):
            parse_args(["--help"])


class TestParseArgsValid:
    """Valid explicit arguments."""

    def test_scenario_and_out(self) -> None:
        config = parse_args(["--scenario", "derham_disk", "--out", "r.json"])
        assert config.scenario == "derham_disk"
        assert config.out == "r.json"

    def test_field_overrides(self) -> None:
        config = parse_args(
            ["--p", "7", "--deg-cap", "20", "--op-cap", "10", "--levels", "3"]
        )
        assert config.p == 7
        assert config.deg_cap == 20
        assert config.op_cap == 10
        assert config.levels == 3

    def test_ladder(self) -> None:
        config = parse_args(["--ladder", "8,16,32"])
        assert config.ladder == (8, 16, 32)

    def test_flags(self) -> None:
        config = parse_args(["--validate", "--list", "--debug"])
        assert config.validate is True
        assert config.list_builtins is True
        assert config.debug is True


class TestParseArgsInvalid:
    """Invalid values exit through argparse."""

    def test_non_integer_p(self) -> None:
        with pytest.raises(SystemExit):
            parse_args(["--p", "five"])

    def test_decreasing_ladder(self) -> None:
        with pytest.raises(SystemExit):
            parse_args(["--ladder", "64,32"])

    def test_unknown_flag(self) -> None:
        with pytest.raises(SystemExit):
            parse_args(["--prime", "5"])


class TestParseLadder:
    """The ladder argument type."""

    def test_spaces_and_trailing_comma(self) -> None:
        assert parse_ladder(" 4, 9,") == (4, 9)

    def test_empty(self) -> None:
        with pytest.raises(argparse.ArgumentTypeError):
            parse_ladder(",")

    def test_zero_cap(self) -> None:
        with pytest.raises(argparse.ArgumentTypeError):
            parse_ladder("0,4")

    def test_repeated_cap(self) -> None:
        with pytest.raises(argparse.ArgumentTypeError):
            parse_ladder("4,4")

    def test_not_a_number(self) -> None:
        with pytest.raises(argparse.ArgumentTypeError):
            parse_ladder("4,x")


class TestSeed:
    """DCAP_SEED handling."""

    def test_seed_from_env(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv(SEED_ENV, "42")
        assert seed_from_env() == 42
        assert parse_args([]).seed == 42

    def test_bad_seed_falls_back(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv(SEED_ENV, "abc")
        assert seed_from_env(7) == 7

    def test_unset(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.delenv(SEED_ENV, raising=False)
        assert seed_from_env(3) == 3
