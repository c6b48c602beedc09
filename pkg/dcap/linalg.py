"""
Exact sparse linear algebra over Q, backed by sympy's DomainMatrix.

Matrices are kept as {row: {col: Fraction}} dictionaries; conversion to and
from DomainMatrix over QQ happens only here.
"""

import logging
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

logger = logging.getLogger(__name__)

Entries = Dict[int, Dict[int, Fraction]]
Vector = Dict[int, Fraction]


def _qq(v: Fraction) -> object:
    return QQ(v.numerator, v.denominator)


def _frac(v: object) -> Fraction:
    return Fraction(int(v.numerator), int(v.denominator))  # type: ignore[attr-defined]


def to_domain_matrix(entries: Entries, shape: Tuple[int, int]) -> DomainMatrix:
    rows = {
        i: {j: _qq(v) for j, v in row.items() if v != 0}
        for i, row in entries.items()
    }
    return DomainMatrix({i: r for i, r in rows.items() if r}, shape, QQ)


def from_domain_matrix(dm: DomainMatrix) -> Entries:
    sparse = dm.to_sparse().rep
    return {
        int(i): {int(j): _frac(v) for j, v in row.items()}
        for i, row in sparse.items()
    }


def matrix_rank(entries: Entries, shape: Tuple[int, int]) -> int:
    if shape[0] == 0 or shape[1] == 0:
        return 0
    return int(to_domain_matrix(entries, shape).rank())


class RowEchelon:
    """
    Reduced row echelon data of A (m x n) together with E, E*A = rref(A).

    Built once from the rref of [A | I]; afterwards every right-hand side is
    solved by one sparse product with E.
    """

    def __init__(self, entries: Entries, shape: Tuple[int, int]) -> None:
        m, n = shape
        self.shape = shape
        self.pivots: List[int] = []
        self.rows: Entries = {}
        self._e_cols: Dict[int, Dict[int, Fraction]] = {}
        if m == 0:
            return
        aug: Dict[int, Dict[int, object]] = {}
        for i in range(m):
            row = {j: _qq(v) for j, v in entries.get(i, {}).items() if v != 0}
            row[n + i] = QQ(1)
            aug[i] = row
        reduced, pivots = DomainMatrix(aug, (m, n + m), QQ).rref()
        self.pivots = [c for c in pivots if c < n]
        for i, row in from_domain_matrix(reduced).items():
            self.rows[i] = {j: v for j, v in row.items() if j < n}
            for j, v in row.items():
                if j >= n:
                    self._e_cols.setdefault(j - n, {})[i] = v
        logger.debug("RowEchelon %dx%d rank %d", m, n, self.rank)

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def solve(self, b: Vector) -> Optional[Vector]:
        """A particular solution of A x = b (free variables 0), or None."""
        eb: Dict[int, Fraction] = {}
        for j, bj in b.items():
            if bj == 0:
                continue
            for i, e in self._e_cols.get(j, {}).items():
                eb[i] = eb.get(i, Fraction(0)) + e * bj
        x: Vector = {}
        for i, value in eb.items():
            if value == 0:
                continue
            if i >= self.rank:
                return None
            x[self.pivots[i]] = value
        return x

    def nullspace(self) -> List[Vector]:
        """Basis of ker A: one vector per free column."""
        n = self.shape[1]
        pivot_set = set(self.pivots)
        basis: List[Vector] = []
        for free in range(n):
            if free in pivot_set:
                continue
            vec: Vector = {free: Fraction(1)}
            for r, c in enumerate(self.pivots):
                v = self.rows.get(r, {}).get(free)
                if v:
                    vec[c] = -v
            basis.append(vec)
        return basis
