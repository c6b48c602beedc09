"""
Unit tests for truncated Tate series, level norms and Laurent windows.
"""

import random
from fractions import Fraction

import pytest

from dcap.padic import NEG_INF, GlobalField
from dcap.tate import (
    LaurentWindow,
    SequenceSpace,
    TateSeries,
    approximant_defect,
    decays,
    kx_profile,
    laurent_split,
    monomials,
    restrict_subdisk,
    truncation_approximants,
)


def poly(fld: GlobalField, *coeffs: object) -> TateSeries:
    return TateSeries(fld, 1, {(j,): c for j, c in enumerate(coeffs)})


def random_series(
    fld: GlobalField, rng: random.Random, degree: int, integral: bool = False
) -> TateSeries:
    """Two-variable polynomial of total degree <= degree."""
    coeffs = {}
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            num = rng.randint(-30, 30)
            den = 1 if integral else fld.p ** rng.randint(0, 2)
            coeffs[(i, j)] = Fraction(num, den) * fld.p ** rng.randint(0, 1)
    return TateSeries(fld, 2, coeffs)


class TestArithmetic:
    """Products, derivatives and truncation."""

    def test_product(self, fld: GlobalField) -> None:
        assert poly(fld, 1, 1) * poly(fld, 1, -1) == poly(fld, 1, 0, -1)

    def test_product_truncates(self, fld: GlobalField) -> None:
        x8 = TateSeries.monomial(fld, (8,))
        assert (x8 * x8).is_zero()

    def test_caps_take_minimum(self, fld: GlobalField) -> None:
        x = TateSeries.variable(fld, 0)
        assert (x.with_cap(3) * x).cap == 3

    def test_derive(self, fld: GlobalField) -> None:
        assert poly(fld, 0, 0, 0, 1).derive(0) == poly(fld, 0, 0, 3)

    def test_leibniz(self, fld: GlobalField, rng: random.Random) -> None:
        for _ in range(10):
            f, g = random_series(fld, rng, 5), random_series(fld, rng, 5)
            for i in (0, 1):
                assert (f * g).derive(i) == f.derive(i) * g + f * g.derive(i)

    def test_derive_bad_index(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            TateSeries.variable(fld, 0).derive(1)

    def test_mismatched_vars(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            TateSeries.variable(fld, 0) + TateSeries.variable(fld, 0, nvars=2)

    def test_truncate(self, fld: GlobalField) -> None:
        assert poly(fld, 1, 2, 3).truncate(1) == poly(fld, 1, 2)

    def test_monomials_graded(self) -> None:
        assert monomials(2, 1) == [(0, 0), (0, 1), (1, 0)]


class TestNorms:
    """Gauss and level norms in log_p form."""

    def test_gauss(self, fld: GlobalField) -> None:
        assert poly(fld, Fraction(1, 5), 1).gauss_log_norm() == 1

    def test_level(self, fld: GlobalField) -> None:
        assert poly(fld, Fraction(1, 5), 1).level_norm(2) == 2

    def test_gauss_multiplicative(self, fld: GlobalField, rng: random.Random) -> None:
        for _ in range(20):
            f, g = random_series(fld, rng, 5), random_series(fld, rng, 5)
            assert (f * g).gauss_log_norm() == f.gauss_log_norm() + g.gauss_log_norm()

    def test_zero_series(self, fld: GlobalField) -> None:
        assert TateSeries.zero(fld).gauss_log_norm() == NEG_INF

    def test_profile_monotone(self, fld: GlobalField) -> None:
        profile = kx_profile(poly(fld, 1, 5, Fraction(1, 25)))
        assert len(profile) == fld.n_max + 1
        assert profile.is_monotone()
        assert profile[0] == 2

    def test_sequence_space(self, fld: GlobalField) -> None:
        space = SequenceSpace(fld, (0, -1))
        assert space.bound_profile().values[:3] == (0, 0, 1)


class TestRestriction:
    """x -> p*x and the truncation approximants."""

    def test_restrict_subdisk(self, fld: GlobalField) -> None:
        f = restrict_subdisk(poly(fld, 1, 1))
        assert f == poly(fld, 1, 5)
        assert f.gauss_log_norm() == 0

    def test_restriction_contracts(self, fld: GlobalField, rng: random.Random) -> None:
        for _ in range(20):
            f = random_series(fld, rng, 6)
            assert restrict_subdisk(f).gauss_log_norm() <= f.gauss_log_norm()

    def test_approximant_defect_bound(
        self, fld: GlobalField, rng: random.Random
    ) -> None:
        for _ in range(10):
            f = random_series(fld, rng, 6, integral=True)
            assert f.gauss_log_norm() <= 0
            for i in range(fld.deg_cap + 1):
                assert approximant_defect(f, i) <= -(i + 1)

    def test_approximant_defect_attained(self, fld: GlobalField) -> None:
        f = poly(fld, *([1] * 13))
        assert [approximant_defect(f, i) for i in range(12)] == [
            -(i + 1) for i in range(12)
        ]
        assert approximant_defect(f, 12) == NEG_INF

    def test_approximants_reach_restriction(self, fld: GlobalField) -> None:
        f = poly(fld, 1, 2, 3)
        chain = truncation_approximants(f)
        assert chain[-1] == restrict_subdisk(f)
        assert chain[0] == poly(fld, 1)

    def test_decays(self, fld: GlobalField) -> None:
        assert decays(poly(fld, 1, 1))
        assert not decays(poly(fld, *([1] * 13)))


class TestLaurentWindow:
    """Windows on the circle |x| = |p| and the Laurent split."""

    def test_norm_on_circle(self, fld: GlobalField) -> None:
        assert LaurentWindow(fld, {-1: Fraction(1)}).log_norm() == 1
        assert LaurentWindow(fld, {2: Fraction(1)}).log_norm() == -2

    def test_out_of_window(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            LaurentWindow(fld, {fld.deg_cap + 1: Fraction(1)})

    def test_split(self, fld: GlobalField) -> None:
        h = LaurentWindow(fld, {-2: Fraction(1), 0: Fraction(3), 1: Fraction(1)})
        f, g = laurent_split(h)
        assert f == poly(fld, 3, 1)
        assert g == LaurentWindow(fld, {-2: Fraction(-1)})
        assert LaurentWindow.from_series(f) - g == h

    def test_split_needs_inner_circle(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            laurent_split(LaurentWindow(fld, {0: Fraction(1)}, radius=0))

    def test_inner_coordinate(self, fld: GlobalField) -> None:
        g = poly(fld, 2, 1)
        window = LaurentWindow.restrict_from_inner(g)
        assert window.coeffs == {0: Fraction(2), 1: Fraction(1, 5)}
        assert window.to_inner() == g
