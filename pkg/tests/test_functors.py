"""
Unit tests for pushforwards, pullbacks, Kashiwara's equivalence and duality.
"""

from fractions import Fraction

import pytest

from dcap.dmods import ConnectionModule, o_dual
from dcap.functors import (
    FiberModule,
    KashiwaraModule,
    closed_pushforward,
    derham_complex,
    derham_pushforward_point,
    dual_rank1,
    kashiwara_restrict,
    kashiwara_roundtrip,
    pullback_composition_check,
    shriek_pullback_point,
    shriek_pullback_projection,
)
from dcap.homalg import NON_STRICT
from dcap.padic import GlobalField
from dcap.tate import TateSeries


def exp_module(fld: GlobalField, lam: object) -> ConnectionModule:
    """(O, d + lam dx); its flat sections are exp(-lam x)."""
    return ConnectionModule.rank_one(TateSeries.constant(fld, lam))


class TestDeRham:
    """Pushforward to a point."""

    def test_structure_sheaf(self, fld: GlobalField) -> None:
        report = derham_pushforward_point(ConnectionModule.trivial(fld), (4, 8))
        assert report.lowest_degree == -1
        assert report.kernel_dims() == [1, 1]
        assert report.convergent_dims() == [1, 1]

    def test_two_disk(self, fld: GlobalField) -> None:
        M = ConnectionModule.trivial(fld, nvars=2)
        report = derham_pushforward_point(M, (3,))
        assert report.lowest_degree == -2
        assert report.kernel_dims() == [1]

    def test_unit_exponent_does_not_converge(self, fld: GlobalField) -> None:
        report = derham_pushforward_point(exp_module(fld, 1), (8,))
        assert report.kernel_dims() == [1]
        assert report.convergent_dims() == [0]

    def test_divisible_exponent_converges(self, fld: GlobalField) -> None:
        report = derham_pushforward_point(exp_module(fld, 5), (8,))
        assert report.convergent_dims() == [1]

    def test_structure_sheaf_is_not_strict(self, fld: GlobalField) -> None:
        report = derham_pushforward_point(ConnectionModule.trivial(fld), (4, 16))
        assert report.strictness[0].verdict == NON_STRICT
        assert all(c.vanishes for c in report.limit_flags.values())

    def test_report_dict(self, fld: GlobalField) -> None:
        data = derham_pushforward_point(ConnectionModule.trivial(fld), (4,)).to_dict()
        assert data["caps"] == [4]
        assert data["lowest_degree"] == -1
        assert "x^0dx" in data["limit_cokernel"]

    def test_needs_a_cap(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            derham_pushforward_point(ConnectionModule.trivial(fld), ())

    def test_three_variables_rejected(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            derham_complex(ConnectionModule.trivial(fld, nvars=3), 2)


class TestKashiwara:
    """Closed pushforward along y = 0 and restriction back."""

    def test_roundtrip(self, fld: GlobalField) -> None:
        for dim in (1, 2, 3):
            verdict = kashiwara_roundtrip(dim, fld, cap=6)
            assert verdict.passed
            assert verdict.kernel_dim == dim
            assert verdict.canonical_rank == dim

    def test_zero_fiber(self, fld: GlobalField) -> None:
        verdict = kashiwara_roundtrip(0, fld, cap=3)
        assert verdict.passed
        assert verdict.kernel_dim == 0 and verdict.canonical_rank == 0

    def test_action_checks(self, fld: GlobalField) -> None:
        data = kashiwara_roundtrip(2, fld, cap=5).to_dict()
        assert data["weyl_relation"] and data["generated"]
        assert data["verdict"] == "PASS"

    def test_restricted_fiber_goes_back(self, fld: GlobalField) -> None:
        fiber = kashiwara_restrict(closed_pushforward(2, fld, cap=4))
        assert isinstance(fiber, FiberModule)
        assert closed_pushforward(fiber, fld, cap=4).dim == 10
        assert kashiwara_roundtrip(fiber, fld, cap=4).passed

    def test_pushforward_dimension(self, fld: GlobalField) -> None:
        assert closed_pushforward(2, fld, cap=5).dim == 12
        assert closed_pushforward(1, fld).dim == fld.op_cap + 1

    def test_restrict_pushforward(self, fld: GlobalField) -> None:
        assert kashiwara_restrict(closed_pushforward(3, fld, cap=4)).dim == 3

    def test_restrict_connection_module(self, fld: GlobalField) -> None:
        M = ConnectionModule.trivial(fld, nvars=2)
        assert kashiwara_restrict(M).dim == 0

    def test_negative_fiber(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            KashiwaraModule(fld, -1, 3)


class TestShriekPullbacks:
    """Extraordinary pullbacks along a projection and a point."""

    def test_projection(self, fld: GlobalField) -> None:
        x = TateSeries.variable(fld, 0)
        pulled = shriek_pullback_projection(ConnectionModule.rank_one(x))
        assert pulled.shift == 1
        assert pulled.module.nvars == 2
        assert pulled.module.theta[0][0][0].is_zero()
        assert pulled.module.theta[1][0][0] == TateSeries.variable(fld, 1, 2)

    def test_projection_needs_one_disk(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            shriek_pullback_projection(ConnectionModule.trivial(fld, nvars=2))

    def test_point_on_line(self, fld: GlobalField) -> None:
        result = shriek_pullback_point(ConnectionModule.trivial(fld), [5], cap=6)
        assert result.dims == {0: 0, 1: 1}
        assert result.shift == -1
        assert result.fiber_rank == 1

    def test_point_on_plane(self, fld: GlobalField) -> None:
        M = ConnectionModule.trivial(fld, nvars=2)
        result = shriek_pullback_point(M, [0, 1], cap=3)
        assert result.dims == {0: 0, 1: 0, 2: 1}
        assert result.shift == -2

    def test_point_outside_disk(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            shriek_pullback_point(ConnectionModule.trivial(fld), [Fraction(1, 5)])

    def test_composition(self, fld: GlobalField) -> None:
        x = TateSeries.variable(fld, 0)
        verdict = pullback_composition_check(
            ConnectionModule.rank_one(x), 5, cap=4
        )
        assert verdict.passed
        assert verdict.direct == (1, -1)
        assert verdict.composed == (1, -1)


class TestDuality:
    """Rank-one duality through Ext^1(D/D L, D)."""

    def test_constant_form(self, fld: GlobalField) -> None:
        M = exp_module(fld, 2)
        result = dual_rank1(M)
        assert result.passed
        assert result.ext0_dim == 0
        assert result.biduality is True
        assert result.module.same_data(o_dual(M))

    def test_polynomial_form(self, fld: GlobalField) -> None:
        x = TateSeries.variable(fld, 0)
        result = dual_rank1(ConnectionModule.rank_one(x.scale(2)))
        assert result.passed
        assert result.module.theta[0][0][0] == x.scale(-2)
        assert result.reductions_checked > 0

    def test_needs_rank_one(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            dual_rank1(ConnectionModule.trivial(fld, rank=2))

    def test_level_out_of_range(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            dual_rank1(exp_module(fld, 2), n=fld.n_max + 1)
