"""
Operation registry and report assembly for scenario runs.

Each runner takes (scenario, field, ladder, rng) and returns a JSON-ready dict;
run_scenario wraps it with the scenario echo and the wall time.
"""

import logging
import random
import time
from fractions import Fraction
from typing import Any, Callable, Dict, List, Tuple

from dcap import diffop, dmods, functors, homalg
from dcap.diffop import commutator, commutator_preimage, random_operator
from dcap.dmods import ConnectionModule, LevelPresentation
from dcap.padic import NEG_INF, GlobalField, fmt_log
from dcap.scenario import (
    OPERATIONS,
    Scenario,
    UnknownOperationError,
    builtin_scenarios,
    cyclic_from_spec,
    module_from_spec,
)
from dcap.tate import LaurentWindow, TateSeries

logger = logging.getLogger(__name__)

Runner = Callable[
    [Scenario, GlobalField, Tuple[int, ...], random.Random], Dict[str, Any]
]


def _module(scenario: Scenario, fld: GlobalField) -> ConnectionModule:
    if scenario.module is None:
        return ConnectionModule.trivial(fld)
    return module_from_spec(scenario.module, fld)


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# de Rham, strictness, limit cokernel


def run_derham(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    M = _module(scenario, fld)
    report = functors.derham_pushforward_point(M, ladder)
    out = report.to_dict()
    out["kernel_dims"] = report.kernel_dims()
    out["convergent_dims"] = report.convergent_dims()
    return out


def run_strictness(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    M = _module(scenario, fld)
    maps = [functors.derham_complex(M, cap).maps[-1] for cap in ladder]
    return homalg.strictness_report(maps, ladder).to_dict()


def run_limit_cokernel(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    M = _module(scenario, fld)
    complexes = [functors.derham_complex(M, cap) for cap in ladder]
    top = [C.maps[-1] for C in complexes]
    forms = {
        name: homalg.limit_cokernel_class(top, {label: 1}, ladder).vanishes
        for name, label in functors.fixed_forms(M.nvars, M.rank)
    }
    lowest = [functors.incoming_map(C, -M.nvars) for C in complexes]
    constant = homalg.limit_cokernel_class(
        lowest, {("w", (), 0, (0,) * M.nvars): 1}, ladder
    )
    return {"caps": list(ladder), "forms": forms, "constant": constant.vanishes}


# Cech


def run_cech_disk(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    cover = scenario.params.get("cover", homalg.COVER_TWO)
    cap = scenario.caps.get("deg", fld.deg_cap)
    M = _module(scenario, fld)
    rank = M.rank
    C = homalg.cech_complex(cover, M, fld.p, cap)
    h0 = homalg.cohomology(C, 0)
    dims = homalg.cohomology_dims(C)
    out: Dict[str, Any] = {
        "cover": cover,
        "cap": cap,
        "h0_dim": h0.kernel.dim,
        "h1_dim": dims.get(1, 0),
        "tate_dim": rank * (cap + 1),
    }
    if cover == homalg.COVER_TWO:
        local = fld.with_caps(deg_cap=cap)
        split_ok = True
        for j in range(-cap, cap + 1):
            window = LaurentWindow(local, {j: Fraction(1)}, cap, 1)
            s1, s2 = homalg.split_cocycle(window)
            split_ok &= homalg.equalizer_defect(s1, s2) == window
        x = TateSeries.variable(local, 0)
        inner, annulus = homalg.cover_section(x)
        glued = homalg.glue(inner, annulus)
        _, shifted = homalg.cover_section(x + TateSeries.constant(local, 1))
        defect = homalg.equalizer_defect(inner, shifted)
        out.update(
            {
                "split_ok": split_ok,
                "glue_ok": glued == x,
                "mismatch_defect": fmt_log(defect.log_norm()),
            }
        )
    return out


# Kashiwara


def run_i_plus(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    fiber_dim = int((scenario.module or {}).get("fiber_dim", 1))
    cap = scenario.caps.get("d", fld.op_cap)
    N = functors.closed_pushforward(fiber_dim, fld, cap)
    y = N.y_map()
    nilpotent = True
    for a in range(fiber_dim):
        for j in range(cap + 1):
            vec = {N.carrier.index[(a, j)]: Fraction(1)}
            for _ in range(j + 1):
                vec = y.apply(vec)
            nilpotent &= not vec
    out: Dict[str, Any] = {"carrier_dim": N.dim, "cap": cap, "y_nilpotent": nilpotent}
    if fiber_dim > 0:
        top = {N.carrier.index[(0, cap)]: Fraction(1)}
        out["bound_profile"] = [fmt_log(v) for v in N.bound_profile(top).values]
        if cap >= 1:
            image = N.carrier.labelled(y.apply({N.carrier.index[(0, 1)]: Fraction(1)}))
            out["y_on_d"] = {repr(k): str(v) for k, v in image.items()}
    return out


def run_i_nat(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    spec = scenario.module or {"fiber_dim": 1}
    if "fiber_dim" in spec:
        dim = int(spec["fiber_dim"])
        N = functors.closed_pushforward(dim, fld, scenario.caps.get("d"))
        return {"source": "i_plus", "dim": functors.kashiwara_restrict(N).dim}
    M = module_from_spec(spec, fld)
    return {"source": "connection", "dim": functors.kashiwara_restrict(M).dim}


def run_kashiwara_roundtrip(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    dims = scenario.params.get("dims", [0, 1, 2, 3])
    if scenario.module and "fiber_dim" in scenario.module:
        dims = [int(scenario.module["fiber_dim"])]
    d_caps = scenario.params.get("d_caps", [8, 16, 32])
    results = [
        functors.kashiwara_roundtrip(int(r), fld, int(c)).to_dict()
        for r in dims
        for c in d_caps
    ]
    connection = functors.kashiwara_restrict(ConnectionModule.trivial(fld)).dim
    ok = all(r["verdict"] == "PASS" for r in results) and connection == 0
    return {
        "results": results,
        "connection_restrict_dim": connection,
        "verdict": _verdict(ok),
    }


# pullbacks and duality


def run_f_shriek(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    M = _module(scenario, fld)
    point = [Fraction(str(c)) for c in scenario.params.get("point", [0] * M.nvars)]
    cap = scenario.caps.get("deg", fld.deg_cap)
    out: Dict[str, Any] = {
        "point": functors.shriek_pullback_point(M, point, cap).to_dict()
    }
    if M.nvars == 1:
        pulled = functors.shriek_pullback_projection(M)
        out["projection"] = {"module": pulled.module.to_dict(), "shift": pulled.shift}
        out["composition"] = functors.pullback_composition_check(
            M, point[0], cap=cap
        ).to_dict()
    return out


def run_dual(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    n = int(scenario.params.get("level", 1))
    samples = int(scenario.params.get("samples", 0))
    M = _module(scenario, fld)
    result = functors.dual_rank1(M, n)
    passes = 0
    for _ in range(samples):
        sample = dmods.random_flat_module(fld, rng, rank=1)
        passes += functors.dual_rank1(sample, n).passed
    out = result.to_dict()
    out["samples"] = samples
    out["samples_passed"] = passes
    return out


def _random_section(
    fld: GlobalField, rng: random.Random, rank: int, nvars: int = 1
) -> Tuple[TateSeries, ...]:
    def entry() -> TateSeries:
        alpha = tuple(rng.randint(0, 3) for _ in range(nvars))
        return TateSeries(fld, nvars, {alpha: Fraction(rng.randint(-5, 5))})

    return tuple(entry() for _ in range(rank))


def run_side_change(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    samples = int(scenario.params.get("samples", 20))
    modules = [_module(scenario, fld)] + [
        dmods.random_flat_module(fld, rng, rank=int(scenario.params.get("rank", 2)))
        for _ in range(samples)
    ]
    roundtrip = True
    for M in modules:
        N = dmods.side_change(M)
        sections = [_random_section(fld, rng, M.rank, M.nvars) for _ in range(3)]
        roundtrip &= dmods.side_change_agrees(M, N, sections)
        roundtrip &= dmods.side_change_inv(N).same_data(M)
    associative = True
    for M in modules[: min(len(modules), 5)]:
        N = dmods.side_change(M)
        P = random_operator(fld, rng, order=2, degree=2)
        Q = random_operator(fld, rng, order=2, degree=2)
        s = _random_section(fld, rng, M.rank)
        associative &= N.right_act(N.right_act(s, P), Q) == N.right_act(s, P * Q)
    double_dual = all(dmods.o_dual(dmods.o_dual(M)).same_data(M) for M in modules)
    return {
        "modules": len(modules),
        "roundtrip": _verdict(roundtrip),
        "associativity": _verdict(associative),
        "double_dual": _verdict(double_dual),
    }


def run_tensor(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    specs = scenario.modules or ([scenario.module] if scenario.module else [])
    out: Dict[str, Any] = {}
    if len(specs) >= 2:
        M, N = (module_from_spec(s, fld) for s in specs[:2])
        T = dmods.tensor_O(M, N)
        out["tensor"] = T.to_dict()
        out["flat"] = T.is_flat()
        if M.rank == N.rank == 1:
            out["adds_forms"] = all(
                T.theta[i][0][0] == M.theta[i][0][0] + N.theta[i][0][0]
                for i in range(T.nvars)
            )
    pairs = int(scenario.params.get("random_pairs", 20))
    nvars = int(scenario.params.get("vars", 2))
    flat = 0
    for _ in range(pairs):
        M = dmods.random_flat_module(fld, rng, rank=2, nvars=nvars)
        N = dmods.random_flat_module(fld, rng, rank=2, nvars=nvars)
        flat += dmods.tensor_O(M, N).is_flat()
    out["random_pairs"] = pairs
    out["random_flat"] = flat
    return out


# operators


def run_division(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    samples = int(scenario.params.get("samples", 50))
    n = int(scenario.params.get("level", 2))
    nvars = int(scenario.params.get("vars", 1))
    exact = 0
    certified = 0
    worst_margin = None
    for _ in range(samples):
        P = random_operator(fld, rng, nvars=nvars)
        i = rng.randrange(nvars)
        pre = commutator_preimage(P, i, n)
        exact += commutator(pre.operator, i) == P
        certified += pre.certified
        if P.is_zero():
            continue
        margin = pre.bound - pre.norm
        if worst_margin is None or margin < worst_margin:
            worst_margin = margin
    return {
        "samples": samples,
        "level": n,
        "exact": exact,
        "certified": certified,
        "worst_margin": fmt_log(NEG_INF if worst_margin is None else worst_margin),
        "verdict": _verdict(exact == samples and certified == samples),
    }


def run_spencer(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    n = int(scenario.params.get("level", 1))
    deg = scenario.caps.get("deg", 4)
    order = scenario.caps.get("order", 3)
    out: Dict[str, Any] = {}
    ok = True
    for m in scenario.params.get("vars", [1, 2]):
        C = diffop.spencer_complex(fld, int(m), n, deg, order)
        ranks = diffop.spencer_exactness(C)
        exact = all(k == r for k, r in ranks.values())
        ok &= exact
        out[str(m)] = {
            "ranks": {
                str(j): {"kernel": k, "image": r} for j, (k, r) in sorted(ranks.items())
            },
            "exact": exact,
        }
    out["verdict"] = _verdict(ok)
    return out


def run_coadmissibility(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    spec = scenario.module or {}
    top = int(scenario.params.get("top", fld.n_max))
    tower: List[LevelPresentation]
    if "cyclic" in spec:
        P, _ = cyclic_from_spec(spec, fld)
        tower = dmods.cyclic_tower(P, top)
    else:
        tower = dmods.connection_tower(_module(scenario, fld), top)
    out: Dict[str, Any] = {
        "levels": [stage.level for stage in tower],
        "tower": dmods.coadmissibility_check(tower).to_dict(),
    }
    stage = scenario.params.get("perturb_stage")
    if stage is not None:
        broken = list(tower)
        broken[int(stage)] = dmods.perturbed(broken[int(stage)], fld.p)
        out["perturbed"] = dmods.coadmissibility_check(broken).to_dict()
    return out


# inverse systems


def _kx_balls(params: Dict[str, Any], length: int) -> List[homalg.BoundedBall]:
    radii = params.get("radii", [0, 3, 10])
    return [
        homalg.BoundedBall(tuple(Fraction(r) for _ in range(length))) for r in radii
    ]


def run_prenuclear(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    stages = int(scenario.params.get("stages", 6))
    dim = int(scenario.params.get("dim", 33))
    tolerances = [Fraction(e) for e in scenario.params.get("tolerances", [-2, 0, 2])]
    balls = _kx_balls(scenario.params, stages)
    tower = homalg.kx_tower(fld.p, stages, dim)
    too_small = homalg.InverseSystem(
        tower.stages, tower.transitions, lambda n, r, eps: r
    )
    return {
        "kx_tower": homalg.prenuclear_check(tower, balls, tolerances).to_dict(),
        "violation": homalg.prenuclear_check(too_small, balls, tolerances).to_dict(),
    }


def random_bounded_target(
    tower: homalg.InverseSystem, rng: random.Random, radius: int
) -> List[Dict[int, Fraction]]:
    """Random v_0..v_(N-1) with |v_i| <= radius in V_i."""
    p = tower.stages[0].p
    target = []
    for i in range(tower.length - 1):
        space = tower.stages[i]
        vec: Dict[int, Fraction] = {}
        for ell in rng.sample(range(space.dim), min(4, space.dim)):
            k = int((radius - space.weights[ell]) // 1)
            vec[ell] = Fraction(rng.choice([1, 2, 3, 4])) * Fraction(p) ** (-k)
        target.append(vec)
    return target


def run_roos(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], rng: random.Random
) -> Dict[str, Any]:
    stages = int(scenario.params.get("stages", 6))
    dim = int(scenario.params.get("dim", 33))
    radius = int(scenario.params.get("radius", 4))
    tower = homalg.kx_tower(fld.p, stages, dim)
    target = random_bounded_target(tower, rng, radius)
    ball = homalg.BoundedBall(tuple(Fraction(radius) for _ in range(stages)))
    result = homalg.roos_preimage(tower, target, ball)
    exact = homalg.roos_map(tower, result.components) == target
    dominated = all(a <= b for a, b in zip(result.norms, result.certificate))
    out = result.to_dict()
    out["exact"] = exact
    out["dominated"] = dominated
    out["verdict"] = _verdict(exact and dominated)
    return out


REGISTRY: Dict[str, Runner] = {
    "cech_disk": run_cech_disk,
    "coadmissibility": run_coadmissibility,
    "derham": run_derham,
    "division": run_division,
    "dual": run_dual,
    "f_shriek": run_f_shriek,
    "i_nat": run_i_nat,
    "i_plus": run_i_plus,
    "kashiwara_roundtrip": run_kashiwara_roundtrip,
    "limit_cokernel": run_limit_cokernel,
    "prenuclear": run_prenuclear,
    "roos": run_roos,
    "side_change": run_side_change,
    "spencer": run_spencer,
    "strictness": run_strictness,
    "tensor": run_tensor,
}
assert tuple(sorted(REGISTRY)) == OPERATIONS


def run_scenario(
    scenario: Scenario, fld: GlobalField, ladder: Tuple[int, ...], seed: int = 0
) -> Dict[str, Any]:
    """Run the scenario's operation. Only the timing block varies between runs."""
    runner = REGISTRY.get(scenario.op)
    if runner is None:
        raise UnknownOperationError(scenario.op)
    logger.info("running %s (p=%d, ladder %s)", scenario.op, fld.p, list(ladder))
    start = time.perf_counter()
    result = runner(scenario, fld, ladder, random.Random(seed))
    elapsed = time.perf_counter() - start
    return {
        "op": scenario.op,
        "scenario": scenario.to_dict(),
        "field": fld.to_dict(),
        "caps": list(ladder),
        "seed": seed,
        "result": result,
        "timing": {"wall_seconds": round(elapsed, 3)},
    }


def list_builtins() -> Dict[str, List[str]]:
    return {
        "operations": list(OPERATIONS),
        "coverings": list(homalg.BUILTIN_COVERS),
        "scenarios": builtin_scenarios(),
    }


def format_listing(listing: Dict[str, List[str]]) -> str:
    lines = []
    for key in ("operations", "coverings", "scenarios"):
        lines.append(f"{key}:")
        lines.extend(f"  {name}" for name in listing[key])
    return "\n".join(lines)
