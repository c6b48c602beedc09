"""
Unit tests for p-adic valuations, norms and the field settings.
"""

from fractions import Fraction

import pytest

from dcap.padic import (
    NEG_INF,
    GlobalField,
    as_scalar,
    factorial_valuation,
    fmt_log,
    fmt_scalar,
    log_norm,
    norm,
    valuation,
)


class TestValuation:
    """valuation, log_norm and norm on rationals."""

    def test_integer(self) -> None:
        assert valuation(50, 5) == 2
        assert log_norm(50, 5) == -2

    def test_denominator(self) -> None:
        assert valuation(Fraction(3, 25), 5) == -2
        assert norm(Fraction(3, 25), 5) == 25

    def test_unit(self) -> None:
        assert valuation(7, 5) == 0
        assert norm(Fraction(-7, 3), 5) == 1

    def test_zero(self) -> None:
        assert valuation(0, 5) == float("inf")
        assert log_norm(0, 5) == NEG_INF
        assert norm(0, 5) == 0

    def test_text_scalar(self) -> None:
        assert as_scalar("1/5") == Fraction(1, 5)
        assert log_norm("1/5", 5) == 1

    def test_bool_rejected(self) -> None:
        with pytest.raises(TypeError):
            as_scalar(True)

    def test_reciprocal_factorial(self) -> None:
        assert valuation(Fraction(1, 120), 5) == -1
        assert log_norm(Fraction(1, 120), 5) == 1

    def test_ultrametric(self) -> None:
        a, b = Fraction(2, 5), Fraction(7, 25)
        assert log_norm(a + b, 5) <= max(log_norm(a, 5), log_norm(b, 5))


class TestFactorialValuation:
    """Legendre's formula."""

    def test_small(self) -> None:
        assert factorial_valuation(4, 5) == 0
        assert factorial_valuation(5, 5) == 1
        assert factorial_valuation(25, 5) == 6

    def test_thirty(self) -> None:
        assert factorial_valuation(30, 5) == 7

    def test_negative_rejected(self) -> None:
        with pytest.raises(ValueError):
            factorial_valuation(-1, 5)


class TestFormatting:
    """Report text for scalars and log-norms."""

    def test_fmt_scalar(self) -> None:
        assert fmt_scalar(Fraction(3)) == "3"
        assert fmt_scalar(Fraction(-2, 5)) == "-2/5"

    def test_fmt_log(self) -> None:
        assert fmt_log(NEG_INF) == "-inf"
        assert fmt_log(2) == "2"
        assert fmt_log(Fraction(1, 2)) == "1/2"


class TestGlobalField:
    """Validation and derived fields."""

    def test_defaults(self) -> None:
        fld = GlobalField()
        assert (fld.p, fld.deg_cap, fld.op_cap, fld.n_max) == (5, 32, 16, 4)
        assert fld.uniformizer == 5

    def test_non_prime_rejected(self) -> None:
        with pytest.raises(ValueError):
            GlobalField(p=4)

    def test_bad_cap_rejected(self) -> None:
        with pytest.raises(ValueError):
            GlobalField(deg_cap=0)

    def test_with_caps(self) -> None:
        fld = GlobalField().with_caps(deg_cap=64)
        assert fld.deg_cap == 64 and fld.op_cap == 16

    def test_check_level(self) -> None:
        fld = GlobalField(n_max=2)
        fld.check_level(2)
        with pytest.raises(ValueError):
            fld.check_level(3)

    def test_to_dict(self) -> None:
        assert GlobalField(p=3).to_dict() == {
            "p": 3,
            "deg_cap": 32,
            "op_cap": 16,
            "n_max": 4,
        }
