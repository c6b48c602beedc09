"""
Exact scalar arithmetic over Q_p: valuations, norms and the global field settings.

Scalars are fractions.Fraction values. Norms are reported in log_p form:
log|q| = -valuation(q), and the zero scalar has log-norm -inf.
"""

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Union

from sympy import isprime, multiplicity

Scalar = Fraction
LogNorm = Union[int, Fraction, float]

INF = math.inf
NEG_INF = -math.inf


def as_scalar(value: object) -> Fraction:
    """Coerce int, Fraction or 'num/den' text to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot make a scalar from {type(value).__name__}")


def valuation(q: object, p: int) -> Union[int, float]:
    """p-adic valuation of q; +inf for zero."""
    q = as_scalar(q)
    if q == 0:
        return INF
    return int(multiplicity(p, abs(q.numerator))) - int(
        multiplicity(p, q.denominator)
    )


def log_norm(q: object, p: int) -> LogNorm:
    """log_p |q| = -valuation(q); -inf for zero."""
    v = valuation(q, p)
    if v == INF:
        return NEG_INF
    return -v


def norm(q: object, p: int) -> Fraction:
    """|q| = p^(-valuation(q)) as an exact rational; 0 for zero."""
    v = valuation(q, p)
    if v == INF:
        return Fraction(0)
    return Fraction(p) ** (-int(v))


def factorial_valuation(k: int, p: int) -> int:
    """v_p(k!) by Legendre's formula."""
    if k < 0:
        raise ValueError("factorial_valuation needs k >= 0")
    total = 0
    power = p
    while power <= k:
        total += k // power
        power *= p
    return total


def fmt_log(value: LogNorm) -> str:
    """Render a log-norm for reports: exact rational text or '-inf'/'inf'."""
    if value == NEG_INF:
        return "-inf"
    if value == INF:
        return "inf"
    return fmt_scalar(Fraction(value))


def fmt_scalar(q: Fraction) -> str:
    """Lossless text of a rational: 'num/den', or 'num' for integers."""
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class GlobalField:
    """
    Base field settings: K = Q_p with uniformizer pi = p, plus truncation caps.

    deg_cap bounds the total degree of stored series, op_cap the order of stored
    operators, n_max the largest level of the norm families.
    """

    p: int = 5
    deg_cap: int = 32
    op_cap: int = 16
    n_max: int = 4

    def __post_init__(self) -> None:
        if not isinstance(self.p, int) or self.p < 2 or not isprime(self.p):
            raise ValueError(f"p must be a prime, got {self.p!r}")
        if self.deg_cap < 1:
            raise ValueError("deg_cap must be >= 1")
        if self.op_cap < 1:
            raise ValueError("op_cap must be >= 1")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    @property
    def uniformizer(self) -> Fraction:
        return Fraction(self.p)

    def valuation(self, q: object) -> Union[int, float]:
        return valuation(q, self.p)

    def log_norm(self, q: object) -> LogNorm:
        return log_norm(q, self.p)

    def norm(self, q: object) -> Fraction:
        return norm(q, self.p)

    def factorial_valuation(self, k: int) -> int:
        return factorial_valuation(k, self.p)

    def check_level(self, n: int) -> None:
        if n < 0 or n > self.n_max:
            raise ValueError(f"level {n} outside [0, {self.n_max}]")

    def with_caps(
        self,
        deg_cap: Optional[int] = None,
        op_cap: Optional[int] = None,
        n_max: Optional[int] = None,
    ) -> "GlobalField":
        """Copy with some caps replaced (used for ladder stages)."""
        return replace(
            self,
            deg_cap=self.deg_cap if deg_cap is None else deg_cap,
            op_cap=self.op_cap if op_cap is None else op_cap,
            n_max=self.n_max if n_max is None else n_max,
        )

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "deg_cap": self.deg_cap,
            "op_cap": self.op_cap,
            "n_max": self.n_max,
        }
