"""
Truncated Tate and Laurent series with Gauss and level norms.

A TateSeries holds coefficients a_alpha for |alpha| <= cap; products and
derivatives drop whatever lands above the cap. Level norms weight alpha by
n*|alpha| (log_p form), so that the family n -> |f|_n describes f as an element
of K{x} = lim K<p^n x>.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from dcap.padic import NEG_INF, GlobalField, LogNorm, as_scalar

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]


def total_degree(alpha: MultiIndex) -> int:
    return sum(alpha)


def monomials(nvars: int, cap: int) -> List[MultiIndex]:
    """All exponent tuples of total degree <= cap, graded then lexicographic."""
    out: List[MultiIndex] = []
    for deg in range(cap + 1):
        for alpha in product(range(deg + 1), repeat=nvars):
            if sum(alpha) == deg:
                out.append(alpha)
    return out


@dataclass(frozen=True, eq=False)
class TateSeries:
    """Truncated strictly convergent power series in nvars variables."""

    field: GlobalField
    nvars: int
    coeffs: Dict[MultiIndex, Fraction] = field(default_factory=dict)
    cap: Optional[int] = None

    def __post_init__(self) -> None:
        if self.nvars < 1:
            raise ValueError("a series needs at least one variable")
        cap = self.field.deg_cap if self.cap is None else self.cap
        object.__setattr__(self, "cap", cap)
        clean: Dict[MultiIndex, Fraction] = {}
        for alpha, c in self.coeffs.items():
            if len(alpha) != self.nvars:
                raise ValueError(f"exponent {alpha} does not match {self.nvars} vars")
            if min(alpha) < 0:
                raise ValueError(f"negative exponent in {alpha}")
            c = as_scalar(c)
            if c != 0 and sum(alpha) <= cap:
                clean[tuple(alpha)] = c
        object.__setattr__(self, "coeffs", clean)

    # constructors

    @classmethod
    def zero(
        cls, fld: GlobalField, nvars: int = 1, cap: Optional[int] = None
    ) -> "TateSeries":
        return cls(fld, nvars, {}, cap)

    @classmethod
    def constant(
        cls, fld: GlobalField, c: object, nvars: int = 1, cap: Optional[int] = None
    ) -> "TateSeries":
        return cls(fld, nvars, {(0,) * nvars: as_scalar(c)}, cap)

    @classmethod
    def monomial(
        cls,
        fld: GlobalField,
        alpha: MultiIndex,
        c: object = 1,
        cap: Optional[int] = None,
    ) -> "TateSeries":
        return cls(fld, len(alpha), {tuple(alpha): as_scalar(c)}, cap)

    @classmethod
    def variable(
        cls, fld: GlobalField, i: int, nvars: int = 1, cap: Optional[int] = None
    ) -> "TateSeries":
        alpha = tuple(1 if k == i else 0 for k in range(nvars))
        return cls(fld, nvars, {alpha: Fraction(1)}, cap)

    # structure

    @property
    def p(self) -> int:
        return self.field.p

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        """Total degree; -1 for the zero series."""
        return max((sum(a) for a in self.coeffs), default=-1)

    def coefficient(self, alpha: MultiIndex) -> Fraction:
        return self.coeffs.get(tuple(alpha), Fraction(0))

    def terms(self) -> Iterator[Tuple[MultiIndex, Fraction]]:
        return iter(sorted(self.coeffs.items(), key=lambda t: (sum(t[0]), t[0])))

    def evaluate_at_zero(self) -> Fraction:
        return self.coefficient((0,) * self.nvars)

    def with_cap(self, cap: int) -> "TateSeries":
        return TateSeries(self.field, self.nvars, dict(self.coeffs), cap)

    def truncate(self, i: int) -> "TateSeries":
        """Drop all terms of total degree > i (keeps the cap)."""
        kept = {a: c for a, c in self.coeffs.items() if sum(a) <= i}
        return TateSeries(self.field, self.nvars, kept, self.cap)

    def reread(self, nvars: int, positions: Tuple[int, ...]) -> "TateSeries":
        """Same coefficients in a larger polydisk: variable k becomes positions[k]."""
        out: Dict[MultiIndex, Fraction] = {}
        for alpha, c in self.coeffs.items():
            beta = [0] * nvars
            for k, e in enumerate(alpha):
                beta[positions[k]] = e
            out[tuple(beta)] = c
        return TateSeries(self.field, nvars, out, self.cap)

    # arithmetic

    def _check(self, other: "TateSeries") -> None:
        if self.nvars != other.nvars:
            raise ValueError(
                f"variable-count mismatch: {self.nvars} vs {other.nvars}"
            )
        if self.field.p != other.field.p:
            raise ValueError("series over different primes")

    def __add__(self, other: "TateSeries") -> "TateSeries":
        self._check(other)
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out.get(a, Fraction(0)) + c
        return TateSeries(self.field, self.nvars, out, min(self.cap, other.cap))

    def __neg__(self) -> "TateSeries":
        return TateSeries(
            self.field, self.nvars, {a: -c for a, c in self.coeffs.items()}, self.cap
        )

    def __sub__(self, other: "TateSeries") -> "TateSeries":
        return self + (-other)

    def __mul__(self, other: "TateSeries") -> "TateSeries":
        return series_mul(self, other)

    def scale(self, c: object) -> "TateSeries":
        c = as_scalar(c)
        return TateSeries(
            self.field, self.nvars, {a: c * v for a, v in self.coeffs.items()}, self.cap
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TateSeries):
            return NotImplemented
        return self.nvars == other.nvars and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.nvars, frozenset(self.coeffs.items())))

    def __repr__(self) -> str:
        from dcap.textfmt import series_to_text

        return f"TateSeries({series_to_text(self)!r})"

    # norms

    def gauss_log_norm(self) -> LogNorm:
        return level_norm(self, 0)

    def level_norm(self, n: int) -> LogNorm:
        return level_norm(self, n)

    def derive(self, i: int) -> "TateSeries":
        return derive(self, i)

    def derive_multi(self, gamma: MultiIndex) -> "TateSeries":
        """Apply d^gamma = prod_i d_i^gamma_i."""
        out = self
        for i, k in enumerate(gamma):
            for _ in range(k):
                out = derive(out, i)
        return out

    def restrict_subdisk(self) -> "TateSeries":
        return restrict_subdisk(self)


def series_mul(f: TateSeries, g: TateSeries) -> TateSeries:
    """Product truncated to the smaller of the two caps."""
    f._check(g)
    cap = min(f.cap, g.cap)
    out: Dict[MultiIndex, Fraction] = {}
    for a, c in f.coeffs.items():
        da = sum(a)
        for b, d in g.coeffs.items():
            if da + sum(b) > cap:
                continue
            key = tuple(x + y for x, y in zip(a, b))
            out[key] = out.get(key, Fraction(0)) + c * d
    return TateSeries(f.field, f.nvars, out, cap)


def derive(f: TateSeries, i: int) -> TateSeries:
    """Formal partial derivative in variable i."""
    if not 0 <= i < f.nvars:
        raise ValueError(f"variable index {i} out of range for {f.nvars} vars")
    out: Dict[MultiIndex, Fraction] = {}
    for a, c in f.coeffs.items():
        if a[i] == 0:
            continue
        b = list(a)
        b[i] -= 1
        out[tuple(b)] = c * a[i]
    return TateSeries(f.field, f.nvars, out, f.cap)


def level_norm(f: TateSeries, n: int) -> LogNorm:
    """max_alpha (n*|alpha| - v(a_alpha)); -inf for the zero series."""
    best: LogNorm = NEG_INF
    for a, c in f.coeffs.items():
        value = n * sum(a) + f.field.log_norm(c)
        if value > best:
            best = value
    return best


def restrict_subdisk(f: TateSeries) -> TateSeries:
    """Substitute x_i -> p*x_i (restriction to the subdisk |x| <= |p|)."""
    p = f.field.p
    return TateSeries(
        f.field,
        f.nvars,
        {a: c * Fraction(p) ** sum(a) for a, c in f.coeffs.items()},
        f.cap,
    )


def approximant_defect(f: TateSeries, i: int) -> LogNorm:
    """Gauss log-norm of restrict(f) - restrict(trunc_i f)."""
    return (restrict_subdisk(f) - restrict_subdisk(f.truncate(i))).gauss_log_norm()


def truncation_approximants(f: TateSeries) -> List[TateSeries]:
    """The chain restrict(trunc_i f), i = 0..cap, converging to restrict(f)."""
    return [restrict_subdisk(f.truncate(i)) for i in range(f.cap + 1)]


def decays(f: TateSeries) -> bool:
    """
    Truncation stand-in for 'coefficients tend to zero'.

    True when the Gauss norm is attained in degrees <= cap/2 and the upper half
    of the window stays strictly below it.
    """
    if f.is_zero():
        return True
    half = f.cap // 2
    head = TateSeries(
        f.field, f.nvars, {a: c for a, c in f.coeffs.items() if sum(a) <= half}, f.cap
    )
    tail = f - head
    return head.gauss_log_norm() > tail.gauss_log_norm()


@dataclass(frozen=True)
class NormFamily:
    """Levels 0..n_max mapped to log_p-norm values."""

    values: Tuple[LogNorm, ...]

    def __getitem__(self, n: int) -> LogNorm:
        return self.values[n]

    def __len__(self) -> int:
        return len(self.values)

    def is_monotone(self) -> bool:
        return all(a <= b for a, b in zip(self.values, self.values[1:]))

    def is_bounded(self) -> bool:
        return all(v != float("inf") for v in self.values)


def kx_profile(f: TateSeries) -> NormFamily:
    """The family n -> |f|_n for n <= n_max."""
    return NormFamily(tuple(level_norm(f, n) for n in range(f.field.n_max + 1)))


@dataclass(frozen=True)
class SequenceSpace:
    """
    Finite piece of S(V): entries v_0..v_L recorded by their log-norms.

    The bound profile at level n is max_i (n*i + log|v_i|), the log of the
    bound of {p^(-n i) v_i}.
    """

    field: GlobalField
    entries: Tuple[LogNorm, ...]

    @classmethod
    def from_series(cls, fld: GlobalField, vs: Iterable[TateSeries]) -> "SequenceSpace":
        return cls(fld, tuple(v.gauss_log_norm() for v in vs))

    def bound_profile(self) -> NormFamily:
        values = []
        for n in range(self.field.n_max + 1):
            best: LogNorm = NEG_INF
            for i, e in enumerate(self.entries):
                if e != NEG_INF and n * i + e > best:
                    best = n * i + e
            values.append(best)
        return NormFamily(tuple(values))


@dataclass(frozen=True, eq=False)
class LaurentWindow:
    """
    Laurent polynomial in one variable on the circle |x| = |p|^radius.

    Exponents live in [-window, window]; norm is max_j |a_j| p^(-radius*j).
    """

    field: GlobalField
    coeffs: Dict[int, Fraction] = field(default_factory=dict)
    window: Optional[int] = None
    radius: int = 1

    def __post_init__(self) -> None:
        window = self.field.deg_cap if self.window is None else self.window
        object.__setattr__(self, "window", window)
        clean: Dict[int, Fraction] = {}
        for j, c in self.coeffs.items():
            if abs(j) > window:
                raise ValueError(f"exponent {j} outside window [-{window}, {window}]")
            c = as_scalar(c)
            if c != 0:
                clean[int(j)] = c
        object.__setattr__(self, "coeffs", clean)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LaurentWindow):
            return NotImplemented
        return self.coeffs == other.coeffs and self.radius == other.radius

    def __add__(self, other: "LaurentWindow") -> "LaurentWindow":
        out = dict(self.coeffs)
        for j, c in other.coeffs.items():
            out[j] = out.get(j, Fraction(0)) + c
        window = max(self.window, other.window)
        return LaurentWindow(self.field, out, window, self.radius)

    def __neg__(self) -> "LaurentWindow":
        negated = {j: -c for j, c in self.coeffs.items()}
        return LaurentWindow(self.field, negated, self.window, self.radius)

    def __sub__(self, other: "LaurentWindow") -> "LaurentWindow":
        return self + (-other)

    def is_zero(self) -> bool:
        return not self.coeffs

    def log_norm(self) -> LogNorm:
        best: LogNorm = NEG_INF
        for j, c in self.coeffs.items():
            value = self.field.log_norm(c) - self.radius * j
            if value > best:
                best = value
        return best

    def principal_part(self) -> "LaurentWindow":
        return LaurentWindow(
            self.field,
            {j: c for j, c in self.coeffs.items() if j < 0},
            self.window,
            self.radius,
        )

    @classmethod
    def from_series(
        cls, f: TateSeries, window: Optional[int] = None, radius: int = 1
    ) -> "LaurentWindow":
        """Read a one-variable series in x on the circle."""
        if f.nvars != 1:
            raise ValueError("Laurent windows are one-variable")
        return cls(f.field, {a[0]: c for a, c in f.coeffs.items()}, window, radius)

    @classmethod
    def restrict_from_inner(
        cls, g: TateSeries, window: Optional[int] = None
    ) -> "LaurentWindow":
        """
        Restrict a section of the inner disk, given in x' = x/p, to the circle.

        x'^j = p^(-j) x^j.
        """
        if g.nvars != 1:
            raise ValueError("Laurent windows are one-variable")
        p = Fraction(g.field.p)
        return cls(
            g.field, {a[0]: c / p ** a[0] for a, c in g.coeffs.items()}, window, 1
        )

    def restrict_from_annulus(self) -> "LaurentWindow":
        """Read an annulus section on the inner boundary circle |x| = |p|."""
        return LaurentWindow(self.field, dict(self.coeffs), self.window, 1)

    def to_inner(self, cap: Optional[int] = None) -> TateSeries:
        """Inverse of restrict_from_inner for the nonnegative part."""
        p = Fraction(self.field.p)
        return TateSeries(
            self.field,
            1,
            {(j,): c * p**j for j, c in self.coeffs.items() if j >= 0},
            cap,
        )


def laurent_split(h: LaurentWindow) -> Tuple[TateSeries, LaurentWindow]:
    """
    Split h on the circle |x| = |p| as h = f|_cap - g|_cap.

    f (nonnegative part, in the coordinate x) is holomorphic on the inner disk,
    g = -(principal part) is holomorphic on the annulus |p| <= |x| <= 1.
    """
    if h.radius != 1:
        raise ValueError("laurent_split expects a window on the circle |x| = |p|")
    f = TateSeries(
        h.field,
        1,
        {(j,): c for j, c in h.coeffs.items() if j >= 0},
        h.window,
    )
    g = -h.principal_part()
    logger.debug(
        "laurent_split: %d regular, %d principal terms", len(f.coeffs), len(g.coeffs)
    )
    return f, g
