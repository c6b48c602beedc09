"""
D-modules on a closed unit polydisk.

Two kinds of module are modelled: free O-modules of rank r with a flat
connection nabla_i = d_i + Theta_i, and cyclic modules D_n / D_n P in one
variable. Sections of a connection module are tuples of TateSeries, one per
basis vector e_a; Theta_i[b][a] is the e_b-coefficient of nabla_i(e_a).
"""

import logging
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from dcap.diffop import DiffOp, right_divide
from dcap.padic import NEG_INF, GlobalField, LogNorm, fmt_log
from dcap.tate import TateSeries
from dcap.textfmt import operator_to_text, series_body

logger = logging.getLogger(__name__)

Matrix = Tuple[Tuple[TateSeries, ...], ...]
Section = Tuple[TateSeries, ...]


# matrices over TateSeries


def mat_zero(fld: GlobalField, nvars: int, r: int, c: Optional[int] = None) -> Matrix:
    zero = TateSeries.zero(fld, nvars)
    return tuple(tuple(zero for _ in range(r if c is None else c)) for _ in range(r))


def mat_identity(fld: GlobalField, nvars: int, r: int) -> Matrix:
    one = TateSeries.constant(fld, 1, nvars)
    zero = TateSeries.zero(fld, nvars)
    return tuple(tuple(one if a == b else zero for b in range(r)) for a in range(r))


def mat_from_scalars(
    fld: GlobalField, nvars: int, rows: Sequence[Sequence[object]]
) -> Matrix:
    return tuple(
        tuple(TateSeries.constant(fld, c, nvars) for c in row) for row in rows
    )


def mat_add(A: Matrix, B: Matrix) -> Matrix:
    return tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def mat_neg(A: Matrix) -> Matrix:
    return tuple(tuple(-a for a in row) for row in A)


def mat_sub(A: Matrix, B: Matrix) -> Matrix:
    return mat_add(A, mat_neg(B))


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    if not A or not B:
        return tuple(tuple() for _ in A)
    out = []
    for row in A:
        cells = []
        for j in range(len(B[0])):
            total = row[0] * B[0][j]
            for k in range(1, len(row)):
                total = total + row[k] * B[k][j]
            cells.append(total)
        out.append(tuple(cells))
    return tuple(out)


def mat_transpose(A: Matrix) -> Matrix:
    if not A:
        return A
    return tuple(tuple(A[a][b] for a in range(len(A))) for b in range(len(A[0])))


def mat_derive(A: Matrix, i: int) -> Matrix:
    return tuple(tuple(a.derive(i) for a in row) for row in A)


def mat_kron(A: Matrix, B: Matrix) -> Matrix:
    """Kronecker product; index (a, b) -> a * len(B) + b."""
    rows = []
    for ra in A:
        for rb in B:
            rows.append(tuple(x * y for x in ra for y in rb))
    return tuple(rows)


def mat_is_zero(A: Matrix) -> bool:
    return all(a.is_zero() for row in A for a in row)


def mat_apply(A: Matrix, s: Section) -> Section:
    out = []
    for row in A:
        total = TateSeries.zero(s[0].field, s[0].nvars) if s else None
        for a, v in zip(row, s):
            total = total + a * v  # type: ignore[operator]
        out.append(total)
    return tuple(out)  # type: ignore[arg-type]


def mat_reread(A: Matrix, nvars: int, positions: Tuple[int, ...]) -> Matrix:
    return tuple(tuple(a.reread(nvars, positions) for a in row) for row in A)


# connection modules


@dataclass(frozen=True, eq=False)
class ConnectionModule:
    """Free rank-r module with flat connection nabla_i = d_i + Theta_i."""

    field: GlobalField
    nvars: int
    rank: int
    theta: Tuple[Matrix, ...]

    def __post_init__(self) -> None:
        if self.rank < 0:
            raise ValueError("rank must be >= 0")
        if len(self.theta) != self.nvars:
            raise ValueError("one connection matrix per variable is required")
        for A in self.theta:
            if len(A) != self.rank or any(len(row) != self.rank for row in A):
                raise ValueError("connection matrices must be rank x rank")
            for row in A:
                for a in row:
                    if a.nvars != self.nvars:
                        raise ValueError(
                            "connection entries live on the wrong polydisk"
                        )
        if not self.is_flat():
            raise ValueError("connection is not flat")

    # constructors

    @classmethod
    def trivial(
        cls, fld: GlobalField, nvars: int = 1, rank: int = 1
    ) -> "ConnectionModule":
        theta = tuple(mat_zero(fld, nvars, rank) for _ in range(nvars))
        return cls(fld, nvars, rank, theta)

    @classmethod
    def rank_one(cls, *forms: TateSeries) -> "ConnectionModule":
        """(O, d + sum_i a_i dx_i)."""
        if not forms:
            raise ValueError("rank_one needs one connection form per variable")
        fld, nvars = forms[0].field, forms[0].nvars
        if len(forms) != nvars:
            raise ValueError("rank_one needs one connection form per variable")
        return cls(fld, nvars, 1, tuple(((a,),) for a in forms))

    @classmethod
    def from_potentials(
        cls,
        fld: GlobalField,
        potentials: Sequence[TateSeries],
        matrices: Sequence[Sequence[Sequence[object]]],
    ) -> "ConnectionModule":
        """
        Theta_i = sum_k d_i(f_k) A_k.

        Flat whenever the constant matrices A_k commute.
        """
        if not potentials or len(potentials) != len(matrices):
            raise ValueError("one constant matrix per potential is required")
        nvars = potentials[0].nvars
        rank = len(matrices[0])
        theta = []
        for i in range(nvars):
            total = mat_zero(fld, nvars, rank)
            for f, A in zip(potentials, matrices):
                df = f.derive(i)
                total = mat_add(
                    total,
                    tuple(tuple(df.scale(c) for c in row) for row in A),
                )
            theta.append(total)
        return cls(fld, nvars, rank, tuple(theta))

    # structure

    def basis_section(self, a: int) -> Section:
        return tuple(
            TateSeries.constant(self.field, 1 if b == a else 0, self.nvars)
            for b in range(self.rank)
        )

    def zero_section(self) -> Section:
        return tuple(TateSeries.zero(self.field, self.nvars) for _ in range(self.rank))

    def connection(self, i: int, s: Section) -> Section:
        """nabla_i(s) = d_i(s) + Theta_i s."""
        if len(s) != self.rank:
            raise ValueError("section has the wrong rank")
        twist = mat_apply(self.theta[i], s)
        return tuple(v.derive(i) + t for v, t in zip(s, twist))

    def act(self, P: DiffOp, s: Section) -> Section:
        """P.s = sum_alpha f_alpha nabla^alpha(s)."""
        if P.nvars != self.nvars:
            raise ValueError("operator lives on the wrong polydisk")
        out = self.zero_section()
        cache: Dict[Tuple[int, ...], Section] = {(0,) * self.nvars: s}
        for alpha, f in P.terms():
            out = tuple(o + f * v for o, v in zip(out, self._nabla(alpha, cache)))
        return out

    def _nabla(
        self, alpha: Tuple[int, ...], cache: Dict[Tuple[int, ...], Section]
    ) -> Section:
        if alpha in cache:
            return cache[alpha]
        i = next(k for k, e in enumerate(alpha) if e > 0)
        lower = tuple(e - 1 if k == i else e for k, e in enumerate(alpha))
        value = self.connection(i, self._nabla(lower, cache))
        cache[alpha] = value
        return value

    def curvature(self, i: int, j: int) -> Matrix:
        """d_i Theta_j - d_j Theta_i + [Theta_i, Theta_j]."""
        Ti, Tj = self.theta[i], self.theta[j]
        bracket = mat_sub(mat_mul(Ti, Tj), mat_mul(Tj, Ti))
        return mat_add(mat_sub(mat_derive(Tj, i), mat_derive(Ti, j)), bracket)

    def flatness_defect(self) -> LogNorm:
        """Largest Gauss log-norm among all curvature entries; -inf when flat."""
        worst: LogNorm = NEG_INF
        for i in range(self.nvars):
            for j in range(i + 1, self.nvars):
                for row in self.curvature(i, j):
                    for a in row:
                        worst = max(worst, a.gauss_log_norm())
        return worst

    def is_flat(self) -> bool:
        return self.flatness_defect() == NEG_INF

    def same_data(self, other: "ConnectionModule") -> bool:
        return (
            self.nvars == other.nvars
            and self.rank == other.rank
            and self.theta == other.theta
        )

    def to_dict(self) -> dict:
        return {
            "vars": self.nvars,
            "rank": self.rank,
            "theta": [
                [[series_body(a) for a in row] for row in A] for A in self.theta
            ],
        }


def random_flat_module(
    fld: GlobalField,
    rng: random.Random,
    rank: int = 2,
    nvars: int = 1,
    degree: int = 3,
) -> ConnectionModule:
    """
    Sample a flat module through from_potentials.

    The constant matrices are polynomials in one random matrix B, so they
    commute.
    """
    B = [[Fraction(rng.randint(-3, 3), rng.choice((1, fld.p))) for _ in range(rank)]
         for _ in range(rank)]
    B2 = [[sum(B[a][k] * B[k][b] for k in range(rank)) for b in range(rank)]
          for a in range(rank)]
    basis = [
        [[Fraction(1 if a == b else 0) for b in range(rank)] for a in range(rank)],
        B,
        B2,
    ]
    potentials = []
    matrices = []
    for A in basis:
        coeffs = {}
        for _ in range(3):
            alpha = tuple(rng.randint(0, degree) for _ in range(nvars))
            coeffs[alpha] = Fraction(rng.randint(-4, 4), rng.choice((1, 1, fld.p)))
        potentials.append(TateSeries(fld, nvars, coeffs))
        matrices.append(A)
    return ConnectionModule.from_potentials(fld, potentials, matrices)


def tensor_O(M: ConnectionModule, N: ConnectionModule) -> ConnectionModule:
    """M (x)_O N with Theta_i = Theta^M_i (x) I + I (x) Theta^N_i."""
    if M.nvars != N.nvars or M.field.p != N.field.p:
        raise ValueError("tensor_O needs modules on the same polydisk")
    IM = mat_identity(M.field, M.nvars, M.rank)
    IN = mat_identity(N.field, N.nvars, N.rank)
    theta = tuple(
        mat_add(mat_kron(A, IN), mat_kron(IM, B)) for A, B in zip(M.theta, N.theta)
    )
    return ConnectionModule(M.field, M.nvars, M.rank * N.rank, theta)


def o_dual(M: ConnectionModule) -> ConnectionModule:
    """Hom_O(M, O) with the dual connection Theta^v_i = -Theta_i^T."""
    theta = tuple(mat_neg(mat_transpose(A)) for A in M.theta)
    return ConnectionModule(M.field, M.nvars, M.rank, theta)


# right modules


@dataclass(frozen=True, eq=False)
class RightModule:
    """
    Free rank-r module with a right D-action s.d_i = -d_i(s) + Psi_i s.

    twisted marks modules obtained as Omega (x) M; only those can be untwisted.
    """

    field: GlobalField
    nvars: int
    rank: int
    psi: Tuple[Matrix, ...]
    twisted: bool = False

    def right_derivation(self, s: Section, i: int) -> Section:
        twist = mat_apply(self.psi[i], s)
        return tuple(t - v.derive(i) for v, t in zip(s, twist))

    def right_act(self, s: Section, P: DiffOp) -> Section:
        """s.P = sum_alpha ((f_alpha s).d^alpha)."""
        if P.nvars != self.nvars:
            raise ValueError("operator lives on the wrong polydisk")
        out = tuple(TateSeries.zero(self.field, self.nvars) for _ in range(self.rank))
        for alpha, f in P.terms():
            v = tuple(f * c for c in s)
            for i, e in enumerate(alpha):
                for _ in range(e):
                    v = self.right_derivation(v, i)
            out = tuple(o + w for o, w in zip(out, v))
        return out


def side_change(M: ConnectionModule) -> RightModule:
    """
    Omega (x)_O M as a right module.

    (w (x) m).d = (w.d) (x) m - w (x) nabla(m) with w.d = -Lie_d(w); on the top
    form dx_1^..^dx_m the Lie derivative of a coordinate field vanishes, so
    (f dx (x) s).d_i = -(d_i(f s) + Theta_i f s).
    """
    return RightModule(
        M.field, M.nvars, M.rank, tuple(mat_neg(A) for A in M.theta), twisted=True
    )


def side_change_inv(N: RightModule) -> ConnectionModule:
    """
    Omega^(-1) (x)_O N; inverse of side_change.

    nabla_i is read off the right action as e_a -> -(e_a.d_i), column by column.
    """
    if not N.twisted:
        raise ValueError("side_change_inv needs a module carrying the Omega twist")
    basis = [
        tuple(
            TateSeries.constant(N.field, 1 if b == a else 0, N.nvars)
            for b in range(N.rank)
        )
        for a in range(N.rank)
    ]
    theta = []
    for i in range(N.nvars):
        columns = [N.right_derivation(e, i) for e in basis]
        theta.append(
            tuple(
                tuple(-columns[a][b] for a in range(N.rank))
                for b in range(N.rank)
            )
        )
    return ConnectionModule(N.field, N.nvars, N.rank, tuple(theta))


def side_change_agrees(
    M: ConnectionModule, N: RightModule, sections: Sequence[Section]
) -> bool:
    """s.d_i == -nabla_i(s) on every sampled section and variable."""
    for s in sections:
        for i in range(M.nvars):
            left = M.connection(i, s)
            if N.right_derivation(s, i) != tuple(-v for v in left):
                return False
    return True


# finite-level presentations

CONNECTION = "connection"
CYCLIC = "cyclic"


@dataclass(frozen=True, eq=False)
class LevelPresentation:
    """
    Generators e_1..e_rank of a D_n-module with relation rows sum_b R[k][b] e_b = 0.

    For connection modules the rows read d_i e_a - sum_b Theta_i[b][a] e_b; for
    cyclic modules there is the single row (P,).
    """

    level: int
    rank: int
    relations: Tuple[Tuple[DiffOp, ...], ...]
    kind: str = CONNECTION

    def __post_init__(self) -> None:
        if self.level < 0:
            raise ValueError("level must be >= 0")
        if self.kind not in (CONNECTION, CYCLIC):
            raise ValueError(f"unknown presentation kind {self.kind!r}")
        for row in self.relations:
            if len(row) != self.rank:
                raise ValueError("relation row length differs from the rank")
        if self.kind == CYCLIC and (self.rank != 1 or len(self.relations) != 1):
            raise ValueError("a cyclic presentation has one generator and one relation")

    @classmethod
    def from_connection(cls, M: ConnectionModule, n: int) -> "LevelPresentation":
        rows = []
        for i in range(M.nvars):
            d = DiffOp.derivation(M.field, i, M.nvars)
            for a in range(M.rank):
                row = []
                for b in range(M.rank):
                    entry = -DiffOp.from_series(M.theta[i][b][a])
                    if b == a:
                        entry = d + entry
                    row.append(entry)
                rows.append(tuple(row))
        return cls(n, M.rank, tuple(rows), CONNECTION)

    @classmethod
    def cyclic(cls, P: DiffOp, n: int) -> "LevelPresentation":
        return cls(n, 1, ((P,),), CYCLIC)

    @property
    def nvars(self) -> int:
        for row in self.relations:
            for P in row:
                return P.nvars
        return 1

    @property
    def field(self) -> GlobalField:
        for row in self.relations:
            for P in row:
                return P.field
        raise ValueError("empty presentation")

    def normalized(self) -> "LevelPresentation":
        """
        Each relation row rescaled by a power of p to level-n norm exactly 0.

        The rows then generate the relation lattice inside the unit ball of
        D_n, the algebra generated by p^n d_i over O.
        """
        rows = []
        for row in self.relations:
            norm = max((P.level_norm(self.level) for P in row), default=NEG_INF)
            if norm == NEG_INF or norm == 0:
                rows.append(row)
                continue
            c = Fraction(self.field.p) ** int(norm)
            rows.append(tuple(P.scale(c) for P in row))
        return replace(self, relations=tuple(rows))

    def connection_module(self) -> ConnectionModule:
        """Read Theta back off the relation rows of a connection presentation."""
        if self.kind != CONNECTION:
            raise ValueError("not a connection presentation")
        if not self.relations:
            raise ValueError("empty presentation")
        first = self.relations[0][0]
        fld, nvars, r = first.field, first.nvars, self.rank
        theta = []
        for i in range(nvars):
            rows = [[TateSeries.zero(fld, nvars) for _ in range(r)] for _ in range(r)]
            d_i = tuple(1 if k == i else 0 for k in range(nvars))
            for a in range(r):
                row = self.relations[i * r + a]
                # rows may carry a scalar factor c from normalization
                c = row[a].coefficient(d_i).evaluate_at_zero()
                if c == 0:
                    raise ValueError("relation row has no leading derivation")
                for b in range(r):
                    rows[b][a] = -row[b].coefficient((0,) * nvars).scale(1 / c)
            theta.append(tuple(tuple(row) for row in rows))
        return ConnectionModule(fld, nvars, r, tuple(theta))

    def reduce(self, element: Sequence[DiffOp]) -> Tuple[DiffOp, ...]:
        """Normal form of sum_b Q_b e_b modulo the relations."""
        if len(element) != self.rank:
            raise ValueError("element length differs from the rank")
        if self.kind == CYCLIC:
            _, remainder = right_divide(element[0], self.relations[0][0])
            return (remainder,)
        M = self.connection_module()
        total = M.zero_section()
        for b, Q in enumerate(element):
            total = tuple(t + v for t, v in zip(total, M.act(Q, M.basis_section(b))))
        return tuple(DiffOp.from_series(s) for s in total)

    def sample_elements(self, order: int = 2) -> List[Tuple[DiffOp, ...]]:
        """d_i^j e_b for every generator b, variable i and j <= order."""
        fld, m = self.field, self.nvars
        zero = DiffOp.zero(fld, m)
        out = []
        for b in range(self.rank):
            for i in range(m):
                for j in range(order + 1):
                    alpha = tuple(j if k == i else 0 for k in range(m))
                    gen = DiffOp.monomial(fld, (0,) * m, alpha)
                    out.append(tuple(gen if c == b else zero for c in range(self.rank)))
        return out

    def lattice_defect(self, element: Sequence[DiffOp]) -> LogNorm:
        """
        Level-n norm of the reduced element minus that of the element.

        At most 0 when reduction keeps the level-n unit ball inside the unit
        ball of the module; a connection (O, d + dx/p) fails this at level 0
        and passes from level 1 on.
        """
        before = max(P.level_norm(self.level) for P in element)
        after = max(
            (P.level_norm(self.level) for P in self.reduce(element)),
            default=NEG_INF,
        )
        if after == NEG_INF:
            return NEG_INF
        return after - before

    def is_integral(self) -> bool:
        return all(self.lattice_defect(e) <= 0 for e in self.sample_elements())

    def unit_ball_scaling(self) -> LogNorm:
        """Largest level-n norm among the relation entries."""
        return max(
            (P.level_norm(self.level) for row in self.relations for P in row),
            default=NEG_INF,
        )

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "rank": self.rank,
            "kind": self.kind,
            "relations": [[operator_to_text(P) for P in row] for row in self.relations],
            "scaling": fmt_log(self.unit_ball_scaling()),
        }


def base_change_level(P: LevelPresentation) -> LevelPresentation:
    """
    D_(n-1) (x)_(D_n) M_n.

    The level-n unit-ball relations are read at level n-1, where they have
    norm <= 0, and saturated back to norm 0 there.
    """
    if P.level == 0:
        raise ValueError("no level below 0")
    lowered = replace(P.normalized(), level=P.level - 1)
    saturated = lowered.normalized()
    logger.debug(
        "base change %d -> %d: scaling %s -> %s",
        P.level,
        lowered.level,
        fmt_log(lowered.unit_ball_scaling()),
        fmt_log(saturated.unit_ball_scaling()),
    )
    return saturated


@dataclass(frozen=True)
class CoadmissibilityVerdict:
    passed: bool
    failed_stage: Optional[int] = None
    integral: Tuple[bool, ...] = ()

    def to_dict(self) -> dict:
        return {
            "verdict": "PASS" if self.passed else "FAIL",
            "failed_stage": self.failed_stage,
            "integral": list(self.integral),
        }


def _same_module(a: LevelPresentation, b: LevelPresentation) -> bool:
    """
    Each side's relations reduce to zero modulo the other side, and sampled
    generators reduce to the same normal form with the same lattice defect.
    """
    if (a.level, a.rank, a.kind) != (b.level, b.rank, b.kind):
        return False
    for x, y in ((a, b), (b, a)):
        for row in x.normalized().relations:
            if not all(Q.is_zero() for Q in y.reduce(row)):
                return False
    for element in a.sample_elements():
        if a.reduce(element) != b.reduce(element):
            return False
        if a.lattice_defect(element) != b.lattice_defect(element):
            return False
    return True


def coadmissibility_check(tower: Sequence[LevelPresentation]) -> CoadmissibilityVerdict:
    """
    tower[k] at level L_k, decreasing; stage k+1 must be the base change of stage k.

    The first failing stage is reported, along with which stages keep their
    level unit ball.
    """
    if not tower:
        raise ValueError("coadmissibility_check needs a non-empty tower")
    integral = tuple(stage.is_integral() for stage in tower)
    for k in range(len(tower) - 1):
        expected = base_change_level(tower[k])
        if not _same_module(expected, tower[k + 1]):
            logger.info(
                "tower breaks at stage %d (level %d)", k + 1, tower[k + 1].level
            )
            return CoadmissibilityVerdict(False, k + 1, integral)
    return CoadmissibilityVerdict(True, None, integral)


def connection_tower(M: ConnectionModule, top: int) -> List[LevelPresentation]:
    return [LevelPresentation.from_connection(M, n) for n in range(top, -1, -1)]


def cyclic_tower(P: DiffOp, top: int) -> List[LevelPresentation]:
    return [LevelPresentation.cyclic(P, n) for n in range(top, -1, -1)]


def perturbed(P: LevelPresentation, c: object) -> LevelPresentation:
    """The same presentation with the scalar c added to the first relation entry."""
    if not P.relations or P.rank == 0:
        raise ValueError("nothing to perturb")
    first = P.relations[0]
    shift = DiffOp.scalar(first[0].field, c, first[0].nvars)
    row = (first[0] + shift,) + first[1:]
    return replace(P, relations=(row,) + P.relations[1:])
