"""
Unit tests for connection modules, side-changing and level presentations.
"""

import random
from fractions import Fraction

import pytest

from dcap.diffop import DiffOp
from dcap.dmods import (
    CYCLIC,
    ConnectionModule,
    LevelPresentation,
    RightModule,
    base_change_level,
    coadmissibility_check,
    connection_tower,
    cyclic_tower,
    mat_zero,
    o_dual,
    perturbed,
    random_flat_module,
    side_change,
    side_change_agrees,
    side_change_inv,
    tensor_O,
)
from dcap.padic import NEG_INF, GlobalField
from dcap.tate import TateSeries


def const(fld: GlobalField, c: object, nvars: int = 1) -> TateSeries:
    return TateSeries.constant(fld, c, nvars)


def d(fld: GlobalField) -> DiffOp:
    return DiffOp.derivation(fld, 0)


class TestConnectionModule:
    """Construction, flatness and the D-action."""

    def test_trivial_is_flat(self, fld: GlobalField) -> None:
        M = ConnectionModule.trivial(fld, nvars=2, rank=3)
        assert M.rank == 3
        assert M.flatness_defect() == NEG_INF

    def test_curved_rank_one_rejected(self, fld: GlobalField) -> None:
        y = TateSeries.variable(fld, 1, 2)
        with pytest.raises(ValueError):
            ConnectionModule.rank_one(y, TateSeries.zero(fld, 2))

    def test_closed_form_accepted(self, fld: GlobalField) -> None:
        x = TateSeries.variable(fld, 0, 2)
        y = TateSeries.variable(fld, 1, 2)
        M = ConnectionModule.rank_one(y, x)
        assert M.is_flat()

    def test_wrong_shape_rejected(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            ConnectionModule(fld, 1, 2, (mat_zero(fld, 1, 1),))

    def test_missing_forms(self) -> None:
        with pytest.raises(ValueError):
            ConnectionModule.rank_one()

    def test_connection_on_basis(self, fld: GlobalField) -> None:
        M = ConnectionModule.rank_one(const(fld, 2))
        assert M.connection(0, M.basis_section(0)) == (const(fld, 2),)

    def test_act_second_order(self, fld: GlobalField) -> None:
        M = ConnectionModule.rank_one(const(fld, 2))
        d2 = d(fld) * d(fld)
        assert M.act(d2, M.basis_section(0)) == (const(fld, 4),)

    def test_act_is_a_module_action(self, fld: GlobalField) -> None:
        x = TateSeries.variable(fld, 0)
        M = ConnectionModule.rank_one(x)
        P = d(fld) * DiffOp.variable(fld, 0)
        Q = d(fld) + DiffOp.scalar(fld, 3)
        s = M.basis_section(0)
        assert M.act(P * Q, s) == M.act(P, M.act(Q, s))

    def test_random_flat_module(self, fld: GlobalField, rng: random.Random) -> None:
        for _ in range(3):
            M = random_flat_module(fld, rng, rank=2, nvars=2)
            assert M.flatness_defect() == NEG_INF

    def test_to_dict(self, fld: GlobalField) -> None:
        data = ConnectionModule.trivial(fld, rank=2).to_dict()
        assert data["vars"] == 1
        assert data["rank"] == 2
        assert len(data["theta"]) == 1


class TestConstructions:
    """Tensor product, O-dual and side-changing."""

    def test_tensor_of_rank_one_adds_forms(self, fld: GlobalField) -> None:
        a = TateSeries.variable(fld, 0)
        b = const(fld, Fraction(1, 5))
        T = tensor_O(ConnectionModule.rank_one(a), ConnectionModule.rank_one(b))
        assert T.rank == 1
        assert T.theta[0][0][0] == a + b

    def test_tensor_rank_multiplies(self, fld: GlobalField, rng: random.Random) -> None:
        M = random_flat_module(fld, rng, rank=2)
        N = ConnectionModule.trivial(fld, rank=3)
        assert tensor_O(M, N).rank == 6

    def test_tensor_needs_same_disk(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            tensor_O(
                ConnectionModule.trivial(fld, 1), ConnectionModule.trivial(fld, 2)
            )

    def test_dual_negates_rank_one(self, fld: GlobalField) -> None:
        a = TateSeries.variable(fld, 0)
        assert o_dual(ConnectionModule.rank_one(a)).theta[0][0][0] == -a

    def test_double_dual(self, fld: GlobalField, rng: random.Random) -> None:
        M = random_flat_module(fld, rng, rank=2)
        assert o_dual(o_dual(M)).same_data(M)

    def test_side_change_round_trip(
        self, fld: GlobalField, rng: random.Random
    ) -> None:
        M = random_flat_module(fld, rng, rank=2)
        N = side_change(M)
        assert N.twisted
        assert side_change_inv(N).same_data(M)

    def test_right_derivation_is_minus_connection(
        self, fld: GlobalField, rng: random.Random
    ) -> None:
        M = random_flat_module(fld, rng, rank=2)
        N = side_change(M)
        s = (TateSeries.monomial(fld, (2,), 3), TateSeries.variable(fld, 0))
        assert N.right_derivation(s, 0) == tuple(-v for v in M.connection(0, s))
        assert side_change_agrees(M, N, [s, M.basis_section(1)])

    def test_inverse_reads_the_action(self, fld: GlobalField) -> None:
        x = TateSeries.variable(fld, 0)
        M = ConnectionModule.rank_one(x)
        psi = ((TateSeries.constant(fld, 3),),)
        N = RightModule(fld, 1, 1, (psi,), twisted=True)
        back = side_change_inv(N)
        assert back.theta[0][0][0] == const(fld, -3)
        assert not side_change_agrees(M, N, [(x,)])

    def test_untwisted_module_rejected(self, fld: GlobalField) -> None:
        N = RightModule(fld, 1, 1, (mat_zero(fld, 1, 1),))
        with pytest.raises(ValueError):
            side_change_inv(N)

    def test_right_derivation_on_trivial(self, fld: GlobalField) -> None:
        N = side_change(ConnectionModule.trivial(fld))
        x = TateSeries.variable(fld, 0)
        assert N.right_derivation((x,), 0) == (const(fld, -1),)

    def test_right_action_associative(self, fld: GlobalField) -> None:
        N = side_change(ConnectionModule.rank_one(TateSeries.variable(fld, 0)))
        P = d(fld) * DiffOp.variable(fld, 0)
        Q = DiffOp.monomial(fld, (1,), (2,)) + DiffOp.scalar(fld, 2)
        s = (TateSeries.monomial(fld, (2,), 3),)
        assert N.right_act(s, P * Q) == N.right_act(N.right_act(s, P), Q)


class TestLevelPresentation:
    """Finite-level presentations and reduction."""

    def test_negative_level(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            LevelPresentation.cyclic(d(fld), -1)

    def test_unknown_kind(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            LevelPresentation(0, 1, ((d(fld),),), kind="sheaf")

    def test_connection_read_back(self, fld: GlobalField, rng: random.Random) -> None:
        M = random_flat_module(fld, rng, rank=2)
        P = LevelPresentation.from_connection(M, 2)
        assert P.connection_module().same_data(M)

    def test_cyclic_has_no_connection(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            LevelPresentation.cyclic(d(fld), 0).connection_module()

    def test_cyclic_reduce(self, fld: GlobalField) -> None:
        P = d(fld) - DiffOp.scalar(fld, 1)
        pres = LevelPresentation.cyclic(P, 1)
        assert pres.reduce((d(fld),)) == (DiffOp.scalar(fld, 1),)
        assert pres.reduce((P,))[0].is_zero()

    def test_connection_reduce(self, fld: GlobalField) -> None:
        M = ConnectionModule.rank_one(const(fld, 2))
        pres = LevelPresentation.from_connection(M, 0)
        assert pres.reduce((d(fld),)) == (DiffOp.scalar(fld, 2),)

    def test_base_change_lowers_level(self, fld: GlobalField) -> None:
        pres = LevelPresentation.cyclic(d(fld), 3)
        assert base_change_level(pres).level == 2

    def test_base_change_saturates(self, fld: GlobalField) -> None:
        P = d(fld) - DiffOp.scalar(fld, 1)
        lowered = base_change_level(LevelPresentation.cyclic(P, 3))
        assert lowered.relations == ((P.scale(25),),)
        assert lowered.unit_ball_scaling() == 0

    def test_normalized_connection_reads_back(self, fld: GlobalField) -> None:
        M = ConnectionModule.rank_one(TateSeries.variable(fld, 0))
        pres = LevelPresentation.from_connection(M, 2).normalized()
        assert pres.relations[0][0].coefficient((1,)) == const(fld, 25)
        assert pres.connection_module().same_data(M)

    def test_lattice_defect_depends_on_level(self, fld: GlobalField) -> None:
        M = ConnectionModule.rank_one(const(fld, Fraction(1, 5)))
        low = LevelPresentation.from_connection(M, 0)
        high = LevelPresentation.from_connection(M, 1)
        assert low.lattice_defect((d(fld),)) == 1
        assert high.lattice_defect((d(fld),)) == 0
        assert not low.is_integral()
        assert high.is_integral()

    def test_no_level_below_zero(self, fld: GlobalField) -> None:
        with pytest.raises(ValueError):
            base_change_level(LevelPresentation.cyclic(d(fld), 0))

    def test_to_dict(self, fld: GlobalField) -> None:
        data = LevelPresentation.cyclic(d(fld), 2).to_dict()
        assert data["kind"] == CYCLIC
        assert data["level"] == 2
        assert data["rank"] == 1


class TestCoadmissibility:
    """Towers of presentations linked by base change."""

    def test_connection_tower_passes(self, fld: GlobalField) -> None:
        M = ConnectionModule.rank_one(TateSeries.variable(fld, 0))
        verdict = coadmissibility_check(connection_tower(M, 3))
        assert verdict.passed
        assert verdict.failed_stage is None

    def test_cyclic_tower_passes(self, fld: GlobalField) -> None:
        P = d(fld) - DiffOp.scalar(fld, 1)
        assert coadmissibility_check(cyclic_tower(P, 3)).passed

    def test_perturbed_connection_stage(self, fld: GlobalField) -> None:
        M = ConnectionModule.rank_one(TateSeries.variable(fld, 0))
        tower = connection_tower(M, 3)
        tower[2] = perturbed(tower[2], Fraction(1, 5))
        verdict = coadmissibility_check(tower)
        assert not verdict.passed
        assert verdict.failed_stage == 2
        assert verdict.to_dict() == {
            "verdict": "FAIL",
            "failed_stage": 2,
            "integral": [True, True, True, True],
        }

    def test_integral_levels(self, fld: GlobalField) -> None:
        M = ConnectionModule.rank_one(const(fld, Fraction(1, 5)))
        verdict = coadmissibility_check(connection_tower(M, 2))
        assert verdict.passed
        assert verdict.integral == (True, True, False)

    def test_perturbed_cyclic_stage(self, fld: GlobalField) -> None:
        tower = cyclic_tower(d(fld) - DiffOp.scalar(fld, 1), 2)
        tower[1] = perturbed(tower[1], 1)
        assert coadmissibility_check(tower).failed_stage == 1

    def test_single_stage_passes(self, fld: GlobalField) -> None:
        assert coadmissibility_check(cyclic_tower(d(fld), 0)).passed

    def test_empty_tower(self) -> None:
        with pytest.raises(ValueError):
            coadmissibility_check([])
