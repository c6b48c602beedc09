"""
Differential operators in PBW normal form sum_alpha f_alpha d^alpha.

Coefficients are TateSeries on the left. Products use
d^alpha f = sum_{beta <= alpha} binom(alpha, beta) d^beta(f) d^(alpha - beta)
and drop terms whose order exceeds the operator cap or whose series degree
exceeds the series cap. Level norms: |P|_n = max_alpha (log|f_alpha| + n|alpha|).
"""

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import comb
from typing import Dict, Iterator, List, Optional, Tuple

from dcap.homalg import BoundedMap, Complex, TruncBanach, rank
from dcap.padic import NEG_INF, GlobalField, LogNorm, as_scalar
from dcap.tate import MultiIndex, TateSeries, monomials

logger = logging.getLogger(__name__)


def _unit(nvars: int, i: int) -> MultiIndex:
    return tuple(1 if k == i else 0 for k in range(nvars))


def _add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


@dataclass(frozen=True, eq=False)
class DiffOp:
    """Operator sum_alpha f_alpha d^alpha with |alpha| <= cap."""

    field: GlobalField
    nvars: int
    coeffs: Dict[MultiIndex, TateSeries] = field(default_factory=dict)
    cap: Optional[int] = None

    def __post_init__(self) -> None:
        cap = self.field.op_cap if self.cap is None else self.cap
        object.__setattr__(self, "cap", cap)
        clean: Dict[MultiIndex, TateSeries] = {}
        for alpha, f in self.coeffs.items():
            if len(alpha) != self.nvars or f.nvars != self.nvars:
                raise ValueError("operator term does not match the variable count")
            if sum(alpha) <= cap and not f.is_zero():
                clean[tuple(alpha)] = f
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def zero(cls, fld: GlobalField, nvars: int = 1) -> "DiffOp":
        return cls(fld, nvars, {})

    @classmethod
    def from_series(cls, f: TateSeries) -> "DiffOp":
        return cls(f.field, f.nvars, {(0,) * f.nvars: f})

    @classmethod
    def scalar(cls, fld: GlobalField, c: object, nvars: int = 1) -> "DiffOp":
        return cls.from_series(TateSeries.constant(fld, c, nvars))

    @classmethod
    def derivation(cls, fld: GlobalField, i: int, nvars: int = 1) -> "DiffOp":
        return cls(fld, nvars, {_unit(nvars, i): TateSeries.constant(fld, 1, nvars)})

    @classmethod
    def variable(cls, fld: GlobalField, i: int, nvars: int = 1) -> "DiffOp":
        return cls.from_series(TateSeries.variable(fld, i, nvars))

    @classmethod
    def monomial(
        cls, fld: GlobalField, a: MultiIndex, alpha: MultiIndex, c: object = 1
    ) -> "DiffOp":
        """c * x^a * d^alpha."""
        return cls(fld, len(a), {tuple(alpha): TateSeries.monomial(fld, a, c)})

    def is_zero(self) -> bool:
        return not self.coeffs

    def order(self) -> int:
        return max((sum(a) for a in self.coeffs), default=-1)

    def series_degree(self) -> int:
        return max((f.degree() for f in self.coeffs.values()), default=-1)

    def coefficient(self, alpha: MultiIndex) -> TateSeries:
        return self.coeffs.get(
            tuple(alpha), TateSeries.zero(self.field, self.nvars)
        )

    def terms(self) -> Iterator[Tuple[MultiIndex, TateSeries]]:
        return iter(sorted(self.coeffs.items(), key=lambda t: (sum(t[0]), t[0])))

    def __add__(self, other: "DiffOp") -> "DiffOp":
        if self.nvars != other.nvars:
            raise ValueError("variable-count mismatch")
        out = dict(self.coeffs)
        for alpha, f in other.coeffs.items():
            out[alpha] = out[alpha] + f if alpha in out else f
        return DiffOp(self.field, self.nvars, out, min(self.cap, other.cap))

    def __neg__(self) -> "DiffOp":
        return DiffOp(
            self.field, self.nvars, {a: -f for a, f in self.coeffs.items()}, self.cap
        )

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + (-other)

    def __mul__(self, other: "DiffOp") -> "DiffOp":
        return op_mul(self, other)

    def scale(self, c: object) -> "DiffOp":
        c = as_scalar(c)
        return DiffOp(
            self.field,
            self.nvars,
            {a: f.scale(c) for a, f in self.coeffs.items()},
            self.cap,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self.nvars == other.nvars and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.nvars, frozenset(self.coeffs.items())))

    def __repr__(self) -> str:
        from dcap.textfmt import operator_to_text

        return f"DiffOp({operator_to_text(self)!r})"

    def level_norm(self, n: int) -> LogNorm:
        return op_level_norm(self, n)

    def __call__(self, f: TateSeries) -> TateSeries:
        return op_apply(self, f)


def op_mul(P: DiffOp, Q: DiffOp) -> DiffOp:
    """Normal form of the composite P*Q, truncated at the caps."""
    if P.nvars != Q.nvars:
        raise ValueError("variable-count mismatch")
    cap = min(P.cap, Q.cap)
    derivs: Dict[Tuple[MultiIndex, MultiIndex], TateSeries] = {}
    out: Dict[MultiIndex, TateSeries] = {}
    for alpha, f in P.coeffs.items():
        for beta, g in Q.coeffs.items():
            for gamma in product(*(range(k + 1) for k in alpha)):
                order = sum(alpha) - sum(gamma) + sum(beta)
                if order > cap:
                    continue
                key = (beta, gamma)
                if key not in derivs:
                    derivs[key] = g.derive_multi(gamma)
                dg = derivs[key]
                if dg.is_zero():
                    continue
                c = 1
                for a_i, g_i in zip(alpha, gamma):
                    c *= comb(a_i, g_i)
                term = (f * dg).scale(c)
                target = tuple(a - g + b for a, g, b in zip(alpha, gamma, beta))
                out[target] = out[target] + term if target in out else term
    return DiffOp(P.field, P.nvars, out, cap)


def op_apply(P: DiffOp, f: TateSeries) -> TateSeries:
    """P(f) = sum f_alpha * d^alpha(f)."""
    if P.nvars != f.nvars:
        raise ValueError("variable-count mismatch")
    out = TateSeries.zero(f.field, f.nvars, f.cap)
    for alpha, g in P.coeffs.items():
        out = out + g * f.derive_multi(alpha)
    return out


def op_level_norm(P: DiffOp, n: int) -> LogNorm:
    """max_alpha (Gauss-log|f_alpha| + n|alpha|)."""
    best: LogNorm = NEG_INF
    for alpha, f in P.coeffs.items():
        value = f.gauss_log_norm() + n * sum(alpha)
        if value > best:
            best = value
    return best


def decompose(P: DiffOp, i: int) -> Dict[int, DiffOp]:
    """P = sum_j Q_j d_i^j with each Q_j free of d_i."""
    out: Dict[int, Dict[MultiIndex, TateSeries]] = {}
    for alpha, f in P.coeffs.items():
        j = alpha[i]
        rest = tuple(0 if k == i else e for k, e in enumerate(alpha))
        out.setdefault(j, {})[rest] = f
    return {j: DiffOp(P.field, P.nvars, cs, P.cap) for j, cs in out.items()}


@dataclass(frozen=True)
class CommutatorPreimage:
    """C with P = C*y - y*C, plus the level-drop certificate."""

    operator: DiffOp
    level: int
    norm: LogNorm
    bound: LogNorm

    @property
    def certified(self) -> bool:
        return self.norm <= self.bound


def commutator_preimage(P: DiffOp, i: int, n: int) -> CommutatorPreimage:
    """
    Solve P = C*y_i - y_i*C via d^j = (d^(j+1) y - y d^(j+1)) / (j+1).

    C = sum_j Q_j d_i^(j+1) / (j+1), and |C|_(n-1) <= |P|_n + (n-1).
    """
    if n < 1:
        raise ValueError("the level drop needs n >= 1")
    if not 0 <= i < P.nvars:
        raise ValueError(f"coordinate index {i} out of range")
    if P.order() >= P.cap:
        raise ValueError("operator order leaves no room below the cap")
    series_cap = min((f.cap for f in P.coeffs.values()), default=P.field.deg_cap)
    if P.series_degree() >= series_cap:
        raise ValueError("series degree leaves no room below the cap")
    out: Dict[MultiIndex, TateSeries] = {}
    for alpha, f in P.coeffs.items():
        j = alpha[i]
        beta = _add(alpha, _unit(P.nvars, i))
        out[beta] = f.scale(Fraction(1, j + 1))
    C = DiffOp(P.field, P.nvars, out, P.cap)
    return CommutatorPreimage(
        operator=C,
        level=n - 1,
        norm=op_level_norm(C, n - 1),
        bound=op_level_norm(P, n) + (n - 1),
    )


def commutator(C: DiffOp, i: int) -> DiffOp:
    """C*y_i - y_i*C."""
    y = DiffOp.variable(C.field, i, C.nvars)
    return op_mul(C, y) - op_mul(y, C)


def right_divide(Q: DiffOp, P: DiffOp) -> Tuple[DiffOp, DiffOp]:
    """
    One-variable division Q = S*P + R with order(R) < order(P).

    P must have a nonzero constant leading coefficient.
    """
    lead, r = _leading(P)
    S = DiffOp.zero(Q.field, 1)
    R = Q
    while R.order() >= r:
        k = R.order()
        g = R.coeffs[(k,)].scale(1 / lead)
        step = DiffOp(Q.field, 1, {(k - r,): g}, Q.cap)
        S = S + step
        R = R - op_mul(step, P)
    return S, R


def left_divide(Q: DiffOp, P: DiffOp) -> Tuple[DiffOp, DiffOp]:
    """One-variable division Q = P*S + R with order(R) < order(P)."""
    lead, r = _leading(P)
    S = DiffOp.zero(Q.field, 1)
    R = Q
    while R.order() >= r:
        k = R.order()
        g = R.coeffs[(k,)].scale(1 / lead)
        step = DiffOp(Q.field, 1, {(k - r,): g}, Q.cap)
        S = S + step
        R = R - op_mul(P, step)
    return S, R


def _leading(P: DiffOp) -> Tuple[Fraction, int]:
    if P.nvars != 1:
        raise ValueError("division is implemented for one variable")
    r = P.order()
    if r < 0:
        raise ValueError("division by the zero operator")
    top = P.coeffs[(r,)]
    if top.degree() != 0:
        raise ValueError("leading coefficient must be a nonzero constant")
    return top.evaluate_at_zero(), r


# Spencer complex


def _coordinate_bracket(
    fld: GlobalField, m: int, i: int, j: int, cap: int
) -> List[TateSeries]:
    """Coefficients of [d_i, d_j] = sum_k (d_i(b_jk) - d_j(b_ik)) d_k."""
    frame = [
        [TateSeries.constant(fld, 1 if k == r else 0, m, cap) for k in range(m)]
        for r in range(m)
    ]
    return [
        frame[j][k].derive(i) - frame[i][k].derive(j) for k in range(m)
    ]


def wedge_insert(
    k: int, rest: Tuple[int, ...]
) -> Optional[Tuple[int, Tuple[int, ...]]]:
    """Sign and sorted tuple of d_k ^ rest; None when k already occurs."""
    if k in rest:
        return None
    pos = sum(1 for r in rest if r < k)
    return (-1) ** pos, tuple(sorted(rest + (k,)))


def spencer_complex(
    fld: GlobalField,
    m: int,
    n: int,
    deg_cap: Optional[int] = None,
    order_cap: Optional[int] = None,
) -> Complex:
    """
    Truncated D_n (x) wedge^k T -> ... -> D_n -> O placed in degrees -m..1.

    d(P (x) d_i1^..^d_ik) = sum_j (-1)^(j+1) P d_ij (x) (..omit j..)
                          + sum_(j<l) (-1)^(j+l) P (x) [d_ij, d_il] ^ (..omit j, l..)
    Wedge degree k keeps operator order <= order_cap - k so no term is lost.
    """
    if not 1 <= m <= 3:
        raise ValueError("spencer_complex is provided for 1 <= m <= 3")
    fld.check_level(n)
    D = fld.deg_cap if deg_cap is None else deg_cap
    N = fld.op_cap if order_cap is None else order_cap
    if N < m:
        raise ValueError("order cap must be at least the number of variables")
    xs = monomials(m, D)
    spaces: Dict[int, TruncBanach] = {}
    for k in range(m + 1):
        labels = []
        weights = []
        for wedge in combinations(range(m), k):
            for alpha in monomials(m, N - k):
                for a in xs:
                    labels.append(("D", wedge, alpha, a))
                    weights.append(n * sum(alpha))
        spaces[-k] = TruncBanach(fld.p, tuple(labels), tuple(weights))
    spaces[1] = TruncBanach(
        fld.p, tuple(("O", a) for a in xs), tuple(0 for _ in xs)
    )

    def boundary(label: tuple) -> Dict[tuple, Fraction]:
        _, wedge, alpha, a = label
        out: Dict[tuple, Fraction] = {}
        for j, i in enumerate(wedge):
            rest = wedge[:j] + wedge[j + 1:]
            key = ("D", rest, _add(alpha, _unit(m, i)), a)
            out[key] = out.get(key, Fraction(0)) + (-1) ** j
        for j, l in combinations(range(len(wedge)), 2):
            rest = tuple(w for t, w in enumerate(wedge) if t not in (j, l))
            bracket = _coordinate_bracket(fld, m, wedge[j], wedge[l], D)
            for k, c in enumerate(bracket):
                placed = wedge_insert(k, rest)
                if placed is None or c.is_zero():
                    continue
                sign, new_wedge = placed
                for b, v in c.coeffs.items():
                    shifted = _add(a, b)
                    if sum(shifted) > D:
                        continue
                    key = ("D", new_wedge, alpha, shifted)
                    out[key] = out.get(key, Fraction(0)) + sign * (-1) ** (j + l) * v
        return out

    def augmentation(label: tuple) -> Dict[tuple, Fraction]:
        _, _, alpha, a = label
        if sum(alpha) == 0:
            return {("O", a): Fraction(1)}
        return {}

    maps: Dict[int, BoundedMap] = {}
    for k in range(1, m + 1):
        maps[-k] = BoundedMap.from_function(spaces[-k], spaces[-k + 1], boundary)
    maps[0] = BoundedMap.from_function(spaces[0], spaces[1], augmentation)
    logger.debug(
        "spencer_complex m=%d n=%d: dims %s",
        m,
        n,
        {k: v.dim for k, v in spaces.items()},
    )
    return Complex(spaces, maps)


def spencer_exactness(C: Complex) -> Dict[int, Tuple[int, int]]:
    """For each degree j: (dim ker d^j, rank d^(j-1)); exact when equal."""
    out: Dict[int, Tuple[int, int]] = {}
    for j in C.degrees():
        dim = C.spaces[j].dim
        rank_out = rank(C.maps[j]) if j in C.maps else 0
        rank_in = rank(C.maps[j - 1]) if (j - 1) in C.maps else 0
        out[j] = (dim - rank_out, rank_in)
    return out


def random_operator(
    fld: GlobalField,
    rng: random.Random,
    nvars: int = 1,
    order: int = 3,
    degree: int = 3,
    terms: int = 4,
) -> DiffOp:
    """A sparse operator with small rational coefficients and p-power denominators."""
    out: Dict[MultiIndex, TateSeries] = {}
    for _ in range(terms):
        alpha = tuple(rng.randint(0, order) for _ in range(nvars))
        while sum(alpha) > order:
            alpha = tuple(max(0, e - 1) for e in alpha)
        a = tuple(rng.randint(0, degree) for _ in range(nvars))
        c = Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), fld.p ** rng.randint(0, 2))
        term = TateSeries.monomial(fld, a, c)
        out[alpha] = out[alpha] + term if alpha in out else term
    return DiffOp(fld, nvars, out)
