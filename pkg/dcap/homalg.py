"""
Homological algebra of truncated Banach spaces.

A TruncBanach space is K^d with a weighted sup-norm |v| = max_i (log|v_i| + w_i)
on a labelled basis. BoundedMap holds a sparse exact matrix between two such
spaces. Minimal-norm preimages come from non-archimedean orthogonal bases of
kernels; strictness is judged by how those minimal preimages behave along a
ladder of increasing caps.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import (
    Any,
    Callable,
    Dict,
    Hashable,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from dcap.linalg import Entries, RowEchelon, Vector, matrix_rank
from dcap.padic import NEG_INF, LogNorm, fmt_log, log_norm
from dcap.tate import LaurentWindow, TateSeries, laurent_split, restrict_subdisk

logger = logging.getLogger(__name__)

Label = Hashable


@dataclass(frozen=True, eq=False)
class TruncBanach:
    """K^d with labelled basis vectors e_i of log-norm weights[i]."""

    p: int
    labels: Tuple[Label, ...]
    weights: Tuple[LogNorm, ...]
    index: Dict[Label, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.weights):
            raise ValueError("labels and weights differ in length")
        index = {label: i for i, label in enumerate(self.labels)}
        if len(index) != len(self.labels):
            raise ValueError("duplicate basis labels")
        object.__setattr__(self, "index", index)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def norm(self, vec: Vector) -> LogNorm:
        best: LogNorm = NEG_INF
        for i, c in vec.items():
            if c == 0:
                continue
            value = log_norm(c, self.p) + self.weights[i]
            if value > best:
                best = value
        return best

    def vector(self, coords: Dict[Label, object]) -> Vector:
        """Index-keyed vector from label-keyed coordinates."""
        out: Vector = {}
        for label, c in coords.items():
            if label not in self.index:
                raise KeyError(f"label {label!r} is not a basis vector")
            value = Fraction(c)  # type: ignore[arg-type]
            if value != 0:
                out[self.index[label]] = value
        return out

    def labelled(self, vec: Vector) -> Dict[Label, Fraction]:
        return {self.labels[i]: c for i, c in vec.items() if c != 0}


@dataclass(frozen=True, eq=False)
class BoundedMap:
    """Linear map source -> target; entries[row][col] with row in target."""

    source: TruncBanach
    target: TruncBanach
    entries: Entries = field(default_factory=dict)

    @classmethod
    def from_function(
        cls,
        source: TruncBanach,
        target: TruncBanach,
        fn: Callable[[Label], Dict[Label, Fraction]],
        strict: bool = True,
    ) -> "BoundedMap":
        """
        Build the matrix column by column from fn(source label).

        With strict=False, image labels missing from the target are dropped
        (the truncation of the map to the target window).
        """
        entries: Entries = {}
        for col, label in enumerate(source.labels):
            for image, c in fn(label).items():
                if c == 0:
                    continue
                row = target.index.get(image)
                if row is None:
                    if strict:
                        raise KeyError(f"image label {image!r} is not in the target")
                    continue
                slot = entries.setdefault(row, {})
                slot[col] = slot.get(col, Fraction(0)) + Fraction(c)
        return cls(source, target, _clean(entries))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.target.dim, self.source.dim

    def apply(self, vec: Vector) -> Vector:
        out: Vector = {}
        columns = self.columns()
        for col, c in vec.items():
            if c == 0:
                continue
            for row, a in columns.get(col, {}).items():
                out[row] = out.get(row, Fraction(0)) + a * c
        return {i: c for i, c in out.items() if c != 0}

    def columns(self) -> Entries:
        cached = self.__dict__.get("_columns")
        if cached is None:
            cached = {}
            for row, cols in self.entries.items():
                for col, a in cols.items():
                    cached.setdefault(col, {})[row] = a
            object.__setattr__(self, "_columns", cached)
        return cached

    def compose(self, inner: "BoundedMap") -> "BoundedMap":
        """self o inner."""
        if inner.target.dim != self.source.dim:
            raise ValueError("cannot compose: dimension mismatch")
        entries: Entries = {}
        inner_cols = inner.columns()
        for col, column in inner_cols.items():
            for row, c in self.apply(column).items():
                entries.setdefault(row, {})[col] = c
        return BoundedMap(inner.source, self.target, entries)

    def is_zero(self) -> bool:
        return not self.entries

    def op_norm(self) -> LogNorm:
        """sup_v |f(v)| / |v| = max_(i,j) (log|a_ij| + w_i - w_j)."""
        best: LogNorm = NEG_INF
        for row, cols in self.entries.items():
            for col, a in cols.items():
                value = (
                    log_norm(a, self.source.p)
                    + self.target.weights[row]
                    - self.source.weights[col]
                )
                if value > best:
                    best = value
        return best

    def echelon(self) -> RowEchelon:
        cached = self.__dict__.get("_echelon")
        if cached is None:
            cached = RowEchelon(self.entries, self.shape)
            object.__setattr__(self, "_echelon", cached)
        return cached


def _clean(entries: Entries) -> Entries:
    out: Entries = {}
    for row, cols in entries.items():
        kept = {c: v for c, v in cols.items() if v != 0}
        if kept:
            out[row] = kept
    return out


def rank(f: BoundedMap) -> int:
    return matrix_rank(f.entries, f.shape)


def identity_map(space: TruncBanach) -> BoundedMap:
    return BoundedMap(space, space, {i: {i: Fraction(1)} for i in range(space.dim)})


@dataclass(frozen=True, eq=False)
class Complex:
    """Bounded cochain complex with d^j = maps[j]: spaces[j] -> spaces[j+1]."""

    spaces: Dict[int, TruncBanach]
    maps: Dict[int, BoundedMap] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for j, d in self.maps.items():
            source, target = self.spaces.get(j), self.spaces.get(j + 1)
            if source is not d.source or target is not d.target:
                raise ValueError(f"d^{j} does not connect degrees {j} and {j + 1}")
        for j, d in self.maps.items():
            nxt = self.maps.get(j + 1)
            if nxt is not None and not nxt.compose(d).is_zero():
                raise ValueError(f"d^{j + 1} o d^{j} is not zero")

    def degrees(self) -> List[int]:
        return sorted(self.spaces)


# orthogonal bases and minimal preimages


@dataclass(frozen=True)
class OrthogonalBasis:
    """
    Triangular basis (vector, pivot) of a subspace.

    Each pivot carries the largest weighted entry of its vector, and later
    vectors vanish at earlier pivots, which makes the basis orthogonal.
    """

    space: TruncBanach
    vectors: Tuple[Vector, ...]
    pivots: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.vectors)

    def norms(self) -> Tuple[LogNorm, ...]:
        return tuple(self.space.norm(v) for v in self.vectors)

    def reduce(self, vec: Vector) -> Vector:
        """Representative of vec + span of least norm."""
        out = dict(vec)
        for basis_vec, pivot in zip(self.vectors, self.pivots):
            c = out.get(pivot)
            if not c:
                continue
            factor = c / basis_vec[pivot]
            for i, a in basis_vec.items():
                value = out.get(i, Fraction(0)) - factor * a
                if value == 0:
                    out.pop(i, None)
                else:
                    out[i] = value
        return out

    def coordinates(self, vec: Vector) -> Optional[Vector]:
        """Coefficients of vec in this basis, or None if vec is not in the span."""
        rest = dict(vec)
        coords: Vector = {}
        for k, (basis_vec, pivot) in enumerate(zip(self.vectors, self.pivots)):
            c = rest.get(pivot)
            if not c:
                continue
            factor = c / basis_vec[pivot]
            coords[k] = factor
            for i, a in basis_vec.items():
                value = rest.get(i, Fraction(0)) - factor * a
                if value == 0:
                    rest.pop(i, None)
                else:
                    rest[i] = value
        if rest:
            return None
        return coords


def orthogonalize(space: TruncBanach, vectors: Sequence[Vector]) -> OrthogonalBasis:
    """Weighted non-archimedean Gram-Schmidt by repeated global pivoting."""
    remaining = [dict(v) for v in vectors if any(c != 0 for c in v.values())]
    chosen: List[Vector] = []
    pivots: List[int] = []
    while remaining:
        best = None
        for k, vec in enumerate(remaining):
            for i, c in vec.items():
                value = log_norm(c, space.p) + space.weights[i]
                if best is None or value > best[0]:
                    best = (value, k, i)
        assert best is not None
        _, k, pivot = best
        head = remaining.pop(k)
        survivors = []
        for vec in remaining:
            c = vec.get(pivot)
            if c:
                factor = c / head[pivot]
                for i, a in head.items():
                    value = vec.get(i, Fraction(0)) - factor * a
                    if value == 0:
                        vec.pop(i, None)
                    else:
                        vec[i] = value
            if vec:
                survivors.append(vec)
        remaining = survivors
        chosen.append(head)
        pivots.append(pivot)
    return OrthogonalBasis(space, tuple(chosen), tuple(pivots))


def kernel_basis(f: BoundedMap) -> OrthogonalBasis:
    return orthogonalize(f.source, f.echelon().nullspace())


def minimal_preimage(f: BoundedMap, target: Vector) -> Optional[Vector]:
    """A preimage of target of least source norm, or None outside the image."""
    x = f.echelon().solve(target)
    if x is None:
        return None
    return kernel_basis_cached(f).reduce(x)


def kernel_basis_cached(f: BoundedMap) -> OrthogonalBasis:
    cached = f.__dict__.get("_kernel")
    if cached is None:
        cached = kernel_basis(f)
        object.__setattr__(f, "_kernel", cached)
    return cached


def unit(i: int) -> Vector:
    return {i: Fraction(1)}


# strictness


STRICT = "STRICT"
NON_STRICT = "NON-STRICT"


@dataclass(frozen=True)
class StrictnessReport:
    """
    Per-stage worst ratio log(minimal preimage norm) - log(target norm).

    The profile is taken over the basis vectors of the target that lie in the
    image. The verdict uses the excess of each stage, its profile plus the
    log operator norm of the map. Across a
    ladder the map is NON-STRICT when the excess grows from the first to the
    last stage; a single stage is STRICT when its excess is at most 0.
    """

    caps: Tuple[int, ...]
    profile: Tuple[LogNorm, ...]
    verdict: str

    @property
    def is_strict(self) -> bool:
        return self.verdict == STRICT

    def to_dict(self) -> dict:
        return {
            "caps": list(self.caps),
            "profile": [fmt_log(v) for v in self.profile],
            "verdict": self.verdict,
        }


def preimage_ratio(f: BoundedMap) -> LogNorm:
    """max over image basis targets e_t of |minimal preimage| - w_t."""
    worst: LogNorm = NEG_INF
    ech = f.echelon()
    basis = kernel_basis_cached(f)
    for t in range(f.target.dim):
        x = ech.solve(unit(t))
        if x is None:
            continue
        ratio = f.source.norm(basis.reduce(x)) - f.target.weights[t]
        if ratio > worst:
            worst = ratio
    return worst


def _excess(ratio: LogNorm, norm: LogNorm) -> LogNorm:
    if ratio == NEG_INF or norm == NEG_INF:
        return NEG_INF
    return ratio + norm


def strictness_report(
    maps: Sequence[BoundedMap], caps: Optional[Sequence[int]] = None
) -> StrictnessReport:
    if not maps:
        raise ValueError("strictness_report needs at least one stage")
    caps = tuple(caps) if caps is not None else tuple(range(len(maps)))
    if len(caps) != len(maps):
        raise ValueError("one cap per ladder stage is required")
    profile = tuple(preimage_ratio(f) for f in maps)
    excess = [_excess(r, f.op_norm()) for r, f in zip(profile, maps)]
    if len(excess) == 1:
        verdict = STRICT if excess[0] <= 0 else NON_STRICT
    else:
        verdict = NON_STRICT if excess[-1] > excess[0] else STRICT
    logger.info(
        "strictness over caps %s: %s (%s)",
        list(caps),
        verdict,
        [fmt_log(v) for v in profile],
    )
    return StrictnessReport(caps, profile, verdict)


@dataclass(frozen=True)
class LimitCokernelResult:
    """in_image[s] per ladder stage; vanishes when true from some stage on."""

    caps: Tuple[int, ...]
    in_image: Tuple[bool, ...]

    @property
    def from_stage(self) -> Optional[int]:
        start = None
        for s in range(len(self.in_image) - 1, -1, -1):
            if not self.in_image[s]:
                break
            start = s
        return start

    @property
    def vanishes(self) -> bool:
        return self.from_stage is not None

    def to_dict(self) -> dict:
        return {
            "caps": list(self.caps),
            "in_image": list(self.in_image),
            "vanishes": self.vanishes,
            "from_stage": self.from_stage,
        }


def limit_cokernel_class(
    maps: Sequence[BoundedMap],
    vector: Dict[Label, object],
    caps: Optional[Sequence[int]] = None,
) -> LimitCokernelResult:
    """
    Does the class of vector die in the cokernel at every cap from some stage on.

    A stage whose target window does not yet contain the vector counts as alive.
    """
    if not maps:
        raise ValueError("limit_cokernel_class needs at least one stage")
    caps = tuple(caps) if caps is not None else tuple(range(len(maps)))
    flags = []
    for f in maps:
        if any(label not in f.target.index for label in vector):
            flags.append(False)
            continue
        b = f.target.vector(vector)
        flags.append(f.echelon().solve(b) is not None)
    return LimitCokernelResult(caps, tuple(flags))


# cohomology in the left heart


@dataclass(frozen=True, eq=False)
class LeftHeartObject:
    """
    H^j of a complex as the injection coim(d^(j-1)) -> ker(d^j).

    Both spaces carry their induced norms: the kernel basis is orthogonal, so
    its norms are the kernel weights, and the coimage basis uses quotient
    norms. classical_part is the algebraic quotient ker/im with quotient
    weights; it is the whole story when the object is strict.
    """

    degree: int
    coimage: TruncBanach
    kernel: TruncBanach
    inclusion: BoundedMap
    classical_part: TruncBanach
    strictness: StrictnessReport
    kernel_basis: OrthogonalBasis

    @property
    def is_strict(self) -> bool:
        return self.strictness.is_strict

    @property
    def classical_dim(self) -> int:
        return self.classical_part.dim

    def is_injective(self) -> bool:
        return rank(self.inclusion) == self.coimage.dim

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "kernel_dim": self.kernel.dim,
            "coimage_dim": self.coimage.dim,
            "classical_dim": self.classical_dim,
            "classical_weights": [fmt_log(w) for w in self.classical_part.weights],
            "strict": self.is_strict,
            "strictness": self.strictness.to_dict(),
        }


def cohomology(
    C: Complex, j: int, ladder: Sequence[Complex] = ()
) -> LeftHeartObject:
    """
    H^j(C) in the left heart.

    ladder holds the same complex at larger caps; its d^(j-1) stages feed the
    strictness verdict next to C's own.
    """
    if j not in C.spaces:
        raise KeyError(f"complex has no degree {j}")
    V = C.spaces[j]
    d_out = C.maps.get(j)
    if d_out is not None:
        ker = kernel_basis_cached(d_out)
    else:
        ker = orthogonalize(V, [unit(i) for i in range(V.dim)])
    kernel = TruncBanach(
        V.p, tuple(("ker", k) for k in range(len(ker))), ker.norms()
    )

    d_in = C.maps.get(j - 1)
    if d_in is None:
        coimage = TruncBanach(V.p, (), ())
        inclusion = BoundedMap(coimage, kernel, {})
        strictness = StrictnessReport((0,), (NEG_INF,), STRICT)
    else:
        U = d_in.source
        ker_in = kernel_basis_cached(d_in)
        pivots = set(ker_in.pivots)
        kept = [c for c in range(U.dim) if c not in pivots]
        coimage = TruncBanach(
            V.p,
            tuple(U.labels[c] for c in kept),
            tuple(U.norm(ker_in.reduce(unit(c))) for c in kept),
        )
        entries: Entries = {}
        for col, c in enumerate(kept):
            coords = ker.coordinates(d_in.apply(unit(c)))
            if coords is None:
                raise ValueError(f"image of d^{j - 1} leaves ker d^{j}")
            for row, a in coords.items():
                entries.setdefault(row, {})[col] = a
        inclusion = BoundedMap(coimage, kernel, entries)
        stages = [d_in] + [L.maps[j - 1] for L in ladder]
        caps = tuple(range(len(stages)))
        strictness = strictness_report(stages, caps)

    image = orthogonalize(
        kernel, [inclusion.apply(unit(c)) for c in range(coimage.dim)]
    )
    image_pivots = set(image.pivots)
    classes = [k for k in range(kernel.dim) if k not in image_pivots]
    classical = TruncBanach(
        V.p,
        tuple(("H", k) for k in classes),
        tuple(kernel.norm(image.reduce(unit(k))) for k in classes),
    )
    logger.debug(
        "H^%d: ker %d, coim %d, classical %d",
        j,
        kernel.dim,
        coimage.dim,
        classical.dim,
    )
    return LeftHeartObject(j, coimage, kernel, inclusion, classical, strictness, ker)


# inverse systems

Witness = Callable[[int, LogNorm, LogNorm], LogNorm]


@dataclass(frozen=True)
class BoundedBall:
    """Per-stage log-radii; -inf is the ball {0}."""

    radii: Tuple[LogNorm, ...]

    def contains(self, stage: int, space: TruncBanach, vec: Vector) -> bool:
        return space.norm(vec) <= self.radii[stage]


@dataclass(frozen=True, eq=False)
class InverseSystem:
    """
    Stages V_0 <- V_1 <- ... <- V_N with transitions[n]: V_(n+1) -> V_n.

    witness(n, r, eps) gives the log-radius of a ball B' in V_(n+2) whose image
    in V_n covers the image of the r-ball of V_(n+1) up to open eps-balls.
    """

    stages: Tuple[TruncBanach, ...]
    transitions: Tuple[BoundedMap, ...]
    witness: Optional[Witness] = None

    def __post_init__(self) -> None:
        if len(self.transitions) != len(self.stages) - 1:
            raise ValueError("an inverse system needs one transition per step")
        for n, rho in enumerate(self.transitions):
            if rho.source is not self.stages[n + 1] or rho.target is not self.stages[n]:
                raise ValueError(f"transition {n} does not map V_{n + 1} -> V_{n}")

    @property
    def length(self) -> int:
        return len(self.stages)

    def is_diagonal(self) -> bool:
        for rho in self.transitions:
            if rho.source.labels != rho.target.labels:
                return False
            for row, cols in rho.entries.items():
                if set(cols) != {row}:
                    return False
        return True

    def factor(self, n: int, label_index: int) -> Fraction:
        """Diagonal entry of transitions[n] at a coordinate."""
        return self.transitions[n].entries.get(label_index, {}).get(
            label_index, Fraction(0)
        )

    def push(self, i: int, j: int, vec: Vector) -> Vector:
        """rho_i o ... o rho_(j-1): V_j -> V_i."""
        out = vec
        for n in range(j - 1, i - 1, -1):
            out = self.transitions[n].apply(out)
        return out

    def push_norm(self, i: int, j: int) -> LogNorm:
        """Operator norm of the composite V_j -> V_i."""
        if i == j:
            return 0
        f = self.transitions[j - 1]
        for n in range(j - 2, i - 1, -1):
            f = self.transitions[n].compose(f)
        return f.op_norm()


def kx_tower(p: int, stages: int = 6, dim: int = 33) -> InverseSystem:
    """
    Truncation of K{x} = lim K<p^n x>: V_n has weights n*j, identity transitions.

    Witness: the r-ball of V_(n+1) is covered up to eps by its terms of degree
    j <= r - eps, which lie in the (r + floor(r - eps))-ball of V_(n+2).
    """
    spaces = tuple(
        TruncBanach(p, tuple(range(dim)), tuple(n * j for j in range(dim)))
        for n in range(stages)
    )
    transitions = tuple(
        BoundedMap(spaces[n + 1], spaces[n], {j: {j: Fraction(1)} for j in range(dim)})
        for n in range(stages - 1)
    )

    def witness(n: int, r: LogNorm, eps: LogNorm) -> LogNorm:
        if r == NEG_INF or r - eps < 0:
            return NEG_INF
        return r + int(r - eps)

    return InverseSystem(spaces, transitions, witness)


@dataclass(frozen=True)
class PrenuclearVerdict:
    passed: bool
    checked: int
    counterexample: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checked": self.checked,
            "counterexample": self.counterexample,
        }


def _require_diagonal(S: InverseSystem) -> None:
    if not S.is_diagonal():
        raise ValueError("only diagonal transitions are supported")


def _floor_log(value: LogNorm) -> int:
    return int(value // 1)


def prenuclear_check(
    S: InverseSystem,
    samples: Sequence[BoundedBall],
    tolerances: Sequence[LogNorm],
) -> PrenuclearVerdict:
    """
    Test the witness on sampled balls and tolerances.

    For a diagonal system the worst vectors of the r-ball are single coordinates
    c*e_l with log|c| as large as the ball allows. Each either lands in the
    open eps-ball of V_n, or must be hit exactly from V_(n+2) inside B'.
    """
    if S.witness is None:
        raise ValueError("the inverse system has no witness")
    _require_diagonal(S)
    p = S.stages[0].p
    checked = 0
    for n in range(S.length - 2):
        mid, low, high = S.stages[n + 1], S.stages[n], S.stages[n + 2]
        for ball in samples:
            r = ball.radii[n + 1]
            if r == NEG_INF:
                continue
            for eps in tolerances:
                radius = S.witness(n, r, eps)
                for ell in range(mid.dim):
                    checked += 1
                    k = _floor_log(r - mid.weights[ell])
                    c = Fraction(p) ** (-k)
                    image = S.factor(n, ell) * c
                    if image == 0 or log_norm(image, p) + low.weights[ell] < eps:
                        continue
                    lift = S.factor(n + 1, ell)
                    needed = (
                        log_norm(c / lift, p) + high.weights[ell] if lift else None
                    )
                    if needed is None or needed > radius:
                        return PrenuclearVerdict(
                            False,
                            checked,
                            {
                                "stage": n,
                                "label": repr(mid.labels[ell]),
                                "radius": fmt_log(r),
                                "eps": fmt_log(eps),
                                "needed": (
                                    "unreachable" if needed is None else fmt_log(needed)
                                ),
                                "witness": fmt_log(radius),
                            },
                        )
    logger.info("prenuclear_check passed %d test vectors", checked)
    return PrenuclearVerdict(True, checked)


@dataclass(frozen=True)
class RoosPreimage:
    """
    y = (y_0..y_N) with y_i - rho_i(y_(i+1)) = v_i for i < N.

    certificate[i] bounds |y_i| from the target norms, the witness radii of
    the corrections and the operator norms of the transition composites.
    """

    components: Tuple[Vector, ...]
    norms: Tuple[LogNorm, ...]
    certificate: Tuple[LogNorm, ...]
    corrections: Tuple[LogNorm, ...]

    def to_dict(self) -> dict:
        return {
            "norms": [fmt_log(v) for v in self.norms],
            "certificate": [fmt_log(v) for v in self.certificate],
            "corrections": [fmt_log(v) for v in self.corrections],
        }


def roos_map(S: InverseSystem, y: Sequence[Vector]) -> List[Vector]:
    """(y_i - rho_i(y_(i+1)))_i for i < len(y) - 1."""
    out = []
    for i in range(len(y) - 1):
        v = dict(y[i])
        for k, c in S.transitions[i].apply(y[i + 1]).items():
            value = v.get(k, Fraction(0)) - c
            if value == 0:
                v.pop(k, None)
            else:
                v[k] = value
        out.append(v)
    return out


def _sub(a: Vector, b: Vector) -> Vector:
    out = dict(a)
    for k, c in b.items():
        value = out.get(k, Fraction(0)) - c
        if value == 0:
            out.pop(k, None)
        else:
            out[k] = value
    return out


def _partial_sums(S: InverseSystem, target: Sequence[Vector], n: int) -> List[Vector]:
    """w_n in prod_(i<=n+1): component i = sum_(i<=j<=n) push(i, j, v_j), last 0."""
    comps: List[Vector] = []
    for i in range(n + 1):
        total: Vector = {}
        for j in range(i, n + 1):
            for k, c in S.push(i, j, target[j]).items():
                total[k] = total.get(k, Fraction(0)) + c
        comps.append({k: c for k, c in total.items() if c != 0})
    comps.append({})
    return comps


def roos_preimage(
    S: InverseSystem, target: Sequence[Vector], ball: BoundedBall
) -> RoosPreimage:
    """
    Preimage of a bounded target under the Roos map prod V_i -> prod V_i.

    The partial sums w_n are corrected stage by stage: the part of the
    mismatch sigma(w_(n+1)) - w'_n that is not eps_n-small in V_n (eps_n = -n)
    is lifted through the witness into V_(n+2) and its diagonal image
    subtracted, which leaves the Roos image unchanged.
    """
    if S.witness is None:
        raise ValueError("the inverse system has no witness")
    _require_diagonal(S)
    N = S.length - 1
    if len(target) != N:
        raise ValueError(f"target needs {N} components, got {len(target)}")
    if len(ball.radii) < N:
        raise ValueError("ball radii must cover every target component")
    p = S.stages[0].p
    for i, v in enumerate(target):
        if S.stages[i].norm(v) > ball.radii[i]:
            raise ValueError(f"target component {i} is outside the ball")

    current = _partial_sums(S, target, 0)
    corrections: List[LogNorm] = []
    for n in range(N - 1):
        nxt = _partial_sums(S, target, n + 1)
        z = _sub(nxt[n + 1], current[n + 1])
        mid, low, high = S.stages[n + 1], S.stages[n], S.stages[n + 2]
        eps = -n
        u: Vector = {}
        for ell, c in z.items():
            image = S.factor(n, ell) * c
            if image == 0 or log_norm(image, p) + low.weights[ell] < eps:
                continue
            lift = S.factor(n + 1, ell)
            if lift == 0:
                raise ValueError(f"transition {n + 1} kills coordinate {ell}")
            u[ell] = c / lift
        radius: LogNorm = NEG_INF
        if u:
            radius = S.witness(n, mid.norm(z), eps)
            if high.norm(u) > radius:
                raise ValueError(f"witness too small at stage {n}")
        corrections.append(radius)
        current = [_sub(nxt[i], S.push(i, n + 2, u)) for i in range(n + 3)]
        logger.debug("roos stage %d: %d lifted coordinates", n, len(u))

    components = tuple(current)
    norms = tuple(S.stages[i].norm(y) for i, y in enumerate(components))
    certificate = []
    for i in range(N + 1):
        bound: LogNorm = NEG_INF
        for j in range(i, N):
            size = S.stages[j].norm(target[j])
            if size != NEG_INF:
                bound = max(bound, size + S.push_norm(i, j))
        for n, radius in enumerate(corrections):
            if radius != NEG_INF and n + 2 >= i:
                bound = max(bound, radius + S.push_norm(i, n + 2))
        certificate.append(bound)
    return RoosPreimage(components, norms, tuple(certificate), tuple(corrections))


# Cech complexes on the closed unit disk

COVER_SINGLE = "disk-single"
COVER_TWO = "disk-two-cover"
BUILTIN_COVERS = (COVER_SINGLE, COVER_TWO)


def cech_complex(cover: str, sheaf: Union[int, Any], p: int, cap: int) -> Complex:
    """
    Cech complex of O^r on the unit disk for a built-in cover.

    sheaf is a module with a rank attribute, whose underlying O-module is O^r,
    or the rank r itself.

    disk-two-cover: U1 = {|x| <= |p|} with coordinate x' = x/p, U2 = the annulus
    {|p| <= |x| <= 1}, overlap the circle |x| = |p|. Sections are truncated to
    exponents |j| <= cap; d(s1, s2) = s2| - s1|.
    """
    sheaf_rank = sheaf if isinstance(sheaf, int) else int(sheaf.rank)
    if sheaf_rank < 1:
        raise ValueError("sheaf rank must be >= 1")
    if cover == COVER_SINGLE:
        disk = TruncBanach(
            p,
            tuple(("disk", k, j) for k in range(sheaf_rank) for j in range(cap + 1)),
            tuple(0 for _ in range(sheaf_rank) for _ in range(cap + 1)),
        )
        return Complex({0: disk})
    if cover != COVER_TWO:
        allowed = ", ".join(BUILTIN_COVERS)
        raise ValueError(f"unknown cover {cover!r}; built-in: {allowed}")
    labels: List[Label] = []
    weights: List[LogNorm] = []
    for k in range(sheaf_rank):
        for j in range(cap + 1):
            labels.append(("inner", k, j))
            weights.append(0)
        for j in range(-cap, cap + 1):
            labels.append(("annulus", k, j))
            weights.append(max(0, -j))
    zero = TruncBanach(p, tuple(labels), tuple(weights))
    overlap = TruncBanach(
        p,
        tuple(
            ("overlap", k, j)
            for k in range(sheaf_rank)
            for j in range(-cap, cap + 1)
        ),
        tuple(-j for _ in range(sheaf_rank) for j in range(-cap, cap + 1)),
    )

    def restrict(label: tuple) -> Dict[Label, Fraction]:
        side, k, j = label
        if side == "inner":
            return {("overlap", k, j): -Fraction(p) ** (-j)}
        return {("overlap", k, j): Fraction(1)}

    d0 = BoundedMap.from_function(zero, overlap, restrict)
    return Complex({0: zero, 1: overlap}, {0: d0})


def cover_section(f: TateSeries) -> Tuple[TateSeries, LaurentWindow]:
    """Restrictions of a global section to U1 (in x' = x/p) and to the annulus."""
    return restrict_subdisk(f), LaurentWindow.from_series(f, radius=0)


def equalizer_defect(inner: TateSeries, annulus: LaurentWindow) -> LaurentWindow:
    """s2| - s1| on the overlap circle; zero exactly when the pair glues."""
    inner_part = LaurentWindow.restrict_from_inner(inner, annulus.window)
    return annulus.restrict_from_annulus() - inner_part


def glue(inner: TateSeries, annulus: LaurentWindow) -> Optional[TateSeries]:
    """The global section with these restrictions, or None if they disagree."""
    if not equalizer_defect(inner, annulus).is_zero():
        return None
    if not annulus.principal_part().is_zero():
        return None
    return TateSeries(
        annulus.field, 1, {(j,): c for j, c in annulus.coeffs.items()}, inner.cap
    )


def split_cocycle(h: LaurentWindow) -> Tuple[TateSeries, LaurentWindow]:
    """A 0-cochain (s1, s2) with s2| - s1| = h."""
    f, g = laurent_split(h)
    return -restrict_subdisk(f), LaurentWindow(
        g.field, {j: -c for j, c in g.coeffs.items()}, g.window, 0
    )


def cohomology_dims(C: Complex) -> Dict[int, int]:
    """dim ker d^j - rank d^(j-1) for every degree, by rank counts alone."""
    ranks = {j: rank(d) for j, d in C.maps.items()}
    return {
        j: C.spaces[j].dim - ranks.get(j, 0) - ranks.get(j - 1, 0)
        for j in C.degrees()
    }
