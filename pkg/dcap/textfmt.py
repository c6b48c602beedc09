"""
Text formats for series and operators.

Series:   'p=5; vars=x,y; deg<=32; 3*x^2*y + 1/5*x'  (header fields optional)
Operator: '(3*x^2)*d1^2*d2 + (1/5)*d1'  with di the i-th coordinate derivation.

Series are read as commutative polynomials with sympy. Operators are read
with non-commuting symbols and multiplied out in the Weyl algebra, so
'd1*x' is x*d1 + 1.

Scenario files are user input, so texts are screened before sympy sees
them: only names, numbers, arithmetic and brackets get through, and the
expression is evaluated with no builtins in scope.
"""

import re
from fractions import Fraction
from tokenize import TokenError
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

from sympy import Add, Float, Function, Integer, Mul, Poly, Pow, Rational, Symbol
from sympy.core.basic import Basic
from sympy.core.sympify import SympifyError
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from dcap.padic import GlobalField, fmt_scalar
from dcap.tate import MultiIndex, TateSeries

if TYPE_CHECKING:
    from dcap.diffop import DiffOp

DEFAULT_VARS = ("x", "y", "z", "u", "v", "w")

_TRANSFORMS = standard_transformations + (convert_xor,)
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z_0-9]*$")
# no implicit multiplication: "2x" is rejected
_SAFE_RE = re.compile(r"^[A-Za-z0-9_+\-*/^().\s]*$")
_ATTRIBUTE_RE = re.compile(r"__|\.\s*[A-Za-z_]")


def _global_dict() -> Dict[str, object]:
    return {
        "__builtins__": {},
        "Float": Float,
        "Function": Function,
        "Integer": Integer,
        "Rational": Rational,
        "Symbol": Symbol,
    }


def default_vars(nvars: int) -> Tuple[str, ...]:
    if nvars > len(DEFAULT_VARS):
        raise ValueError(f"at most {len(DEFAULT_VARS)} variables have default names")
    return DEFAULT_VARS[:nvars]


def _parse(text: str, symbols: Dict[str, Symbol]) -> Basic:
    if not _SAFE_RE.match(text) or _ATTRIBUTE_RE.search(text):
        raise ValueError(f"unsupported characters in {text!r}")
    try:
        expr = parse_expr(
            text,
            local_dict=dict(symbols),
            global_dict=_global_dict(),
            transformations=_TRANSFORMS,
        )
    except (
        SympifyError,
        SyntaxError,
        TypeError,
        TokenError,
        NameError,
        AttributeError,
    ) as e:
        raise ValueError(f"cannot parse {text!r}: {e}") from e
    if not isinstance(expr, Basic):
        raise ValueError(f"not an expression: {text!r}")
    unknown = {str(s) for s in expr.free_symbols} - set(symbols)
    if unknown:
        raise ValueError(f"unknown symbols {sorted(unknown)} in {text!r}")
    return expr


def _poly_terms(
    text: str, names: Sequence[str]
) -> List[Tuple[Tuple[int, ...], Fraction]]:
    symbols = {name: Symbol(name) for name in names}
    expr = _parse(text, symbols)
    try:
        poly = Poly(expr, *[symbols[n] for n in names], domain="QQ")
    except Exception as e:  # sympy raises several PolynomialError subclasses
        raise ValueError(
            f"not a polynomial with rational coefficients: {text!r}"
        ) from e
    out = []
    for exps, c in poly.terms():
        out.append((tuple(int(e) for e in exps), Fraction(int(c.p), int(c.q))))
    return out


def parse_header(text: str) -> Tuple[Dict[str, str], str]:
    """Split 'k=v; k=v; expr' into header fields and the expression."""
    parts = [s.strip() for s in text.split(";")]
    header: Dict[str, str] = {}
    for part in parts[:-1]:
        if part.startswith("deg<="):
            header["deg"] = part[len("deg<="):].strip()
        elif "=" in part:
            key, value = part.split("=", 1)
            header[key.strip()] = value.strip()
        elif part:
            raise ValueError(f"bad header field {part!r}")
    return header, parts[-1]


def parse_series(
    text: str,
    fld: Optional[GlobalField] = None,
    names: Optional[Sequence[str]] = None,
) -> TateSeries:
    """Parse the series text format; header fields override fld and names."""
    header, body = parse_header(text)
    fld = fld or GlobalField()
    if "p" in header or "deg" in header:
        fld = GlobalField(
            p=int(header.get("p", fld.p)),
            deg_cap=int(header.get("deg", fld.deg_cap)),
            op_cap=fld.op_cap,
            n_max=fld.n_max,
        )
    if "vars" in header:
        names = tuple(v.strip() for v in header["vars"].split(","))
    names = tuple(names or ("x",))
    for name in names:
        if not _NAME_RE.match(name) or re.match(r"^d\d+$", name):
            raise ValueError(f"bad variable name {name!r}")
    if not body:
        raise ValueError("empty series expression")
    coeffs = dict(_poly_terms(body, names))
    return TateSeries(fld, len(names), coeffs)


def _monomial_text(alpha: MultiIndex, names: Sequence[str]) -> str:
    parts = []
    for name, e in zip(names, alpha):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def series_body(f: TateSeries, names: Optional[Sequence[str]] = None) -> str:
    names = names or default_vars(f.nvars)
    if f.is_zero():
        return "0"
    chunks = []
    for alpha, c in f.terms():
        mono = _monomial_text(alpha, names)
        if not mono:
            chunks.append(fmt_scalar(c))
        elif c == 1:
            chunks.append(mono)
        else:
            chunks.append(f"{fmt_scalar(c)}*{mono}")
    return " + ".join(chunks).replace("+ -", "- ")


def series_to_text(f: TateSeries, names: Optional[Sequence[str]] = None) -> str:
    names = names or default_vars(f.nvars)
    return f"p={f.p}; vars={','.join(names)}; deg<={f.cap}; {series_body(f, names)}"


def _operator_from_expr(
    expr: Basic, gens: Dict[str, "DiffOp"], one: "DiffOp"
) -> "DiffOp":
    if isinstance(expr, Symbol):
        return gens[expr.name]
    if expr.is_Rational:
        return one.scale(Fraction(int(expr.p), int(expr.q)))
    if isinstance(expr, Float):
        return one.scale(Fraction(str(expr)))
    if isinstance(expr, Add):
        out = one.scale(0)
        for arg in expr.args:
            out = out + _operator_from_expr(arg, gens, one)
        return out
    if isinstance(expr, Mul):
        # sympy keeps non-commuting factors in their written order
        out = one
        for arg in expr.args:
            out = out * _operator_from_expr(arg, gens, one)
        return out
    if isinstance(expr, Pow) and expr.exp.is_Integer and expr.exp >= 0:
        base = _operator_from_expr(expr.base, gens, one)
        out, k = one, int(expr.exp)
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out
    raise ValueError(f"not an operator with polynomial coefficients: {expr}")


def parse_operator(
    text: str,
    fld: Optional[GlobalField] = None,
    nvars: int = 1,
    names: Optional[Sequence[str]] = None,
) -> "DiffOp":
    """
    Parse '(3*x^2)*d1^2*d2 + (1/5)*d1' into a normal-form DiffOp.

    Products are taken in the order written: 'd1*x' reads as x*d1 + 1.
    """
    from dcap.diffop import DiffOp

    fld = fld or GlobalField()
    names = tuple(names or default_vars(nvars))
    dnames = tuple(f"d{i + 1}" for i in range(nvars))
    symbols = {n: Symbol(n, commutative=False) for n in names + dnames}
    expr = _parse(text, symbols)
    gens: Dict[str, DiffOp] = {}
    for i, name in enumerate(names):
        gens[name] = DiffOp.variable(fld, i, nvars)
    for i, name in enumerate(dnames):
        gens[name] = DiffOp.derivation(fld, i, nvars)
    return _operator_from_expr(expr, gens, DiffOp.scalar(fld, 1, nvars))


def operator_to_text(P: "DiffOp", names: Optional[Sequence[str]] = None) -> str:
    names = names or default_vars(P.nvars)
    if P.is_zero():
        return "0"
    chunks = []
    for alpha, f in P.terms():
        dpart = _monomial_text(alpha, [f"d{i + 1}" for i in range(P.nvars)])
        coef = series_body(f, names)
        if not dpart:
            chunks.append(f"({coef})")
        else:
            chunks.append(f"({coef})*{dpart}")
    return " + ".join(chunks)
