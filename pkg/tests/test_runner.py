"""
Unit tests for the operation registry and scenario runs.
"""

from typing import Any, Dict, Optional

import pytest

from dcap.homalg import BUILTIN_COVERS
from dcap.padic import GlobalField
from dcap.runner import (
    REGISTRY,
    UnknownOperationError,
    format_listing,
    list_builtins,
    run_scenario,
)
from dcap.scenario import OPERATIONS, Scenario, load_scenario


@pytest.fixture
def wide() -> GlobalField:
    """Production-sized caps for runs that multiply series repeatedly."""
    return GlobalField(p=5, deg_cap=32, op_cap=16, n_max=4)


def run(
    fld: GlobalField,
    op: str,
    ladder: tuple = (4, 8),
    module: Optional[Dict[str, Any]] = None,
    **extra: Any,
) -> Dict[str, Any]:
    scenario = Scenario(op=op, module=module, **extra)
    return run_scenario(scenario, fld, ladder)["result"]


class TestRegistry:
    """Every operation has a runner."""

    def test_registry_matches_operations(self) -> None:
        assert tuple(sorted(REGISTRY)) == OPERATIONS

    def test_list_builtins(self) -> None:
        listing = list_builtins()
        assert listing["operations"] == list(OPERATIONS)
        assert listing["coverings"] == list(BUILTIN_COVERS)
        assert "roos_kx_tower" in listing["scenarios"]

    def test_format_listing(self) -> None:
        text = format_listing(list_builtins())
        assert text.startswith("operations:")
        assert "  derham" in text.splitlines()
        assert "coverings:" in text


class TestRunScenario:
    """The report envelope."""

    def test_envelope(self, fld: GlobalField) -> None:
        report = run_scenario(Scenario(op="derham"), fld, (4,), seed=3)
        assert report["op"] == "derham"
        assert report["scenario"] == {"op": "derham"}
        assert report["caps"] == [4]
        assert report["seed"] == 3
        assert "wall_seconds" in report["timing"]

    def test_unknown_operation(self, fld: GlobalField) -> None:
        with pytest.raises(UnknownOperationError):
            run_scenario(Scenario(op="pushforward"), fld, (4,))

    def test_same_seed_same_result(self, wide: GlobalField) -> None:
        scenario = load_scenario("roos_kx_tower")
        a = run_scenario(scenario, wide, (4,), seed=1)
        b = run_scenario(scenario, wide, (4,), seed=1)
        assert a["result"] == b["result"]


class TestRunners:
    """Small runs of each operation."""

    def test_derham(self, fld: GlobalField) -> None:
        result = run(fld, "derham")
        assert result["kernel_dims"] == [1, 1]
        assert result["convergent_dims"] == [1, 1]

    def test_limit_cokernel(self, fld: GlobalField) -> None:
        result = run(fld, "limit_cokernel", ladder=(12, 16))
        assert result["caps"] == [12, 16]
        assert all(result["forms"].values())

    def test_cech(self, fld: GlobalField) -> None:
        result = run(fld, "cech_disk", caps={"deg": 6})
        assert result["h0_dim"] == 7
        assert result["h1_dim"] == 0
        assert result["split_ok"]
        assert result["glue_ok"]

    def test_i_plus(self, fld: GlobalField) -> None:
        result = run(fld, "i_plus", module={"fiber_dim": 2}, caps={"d": 3})
        assert result["carrier_dim"] == 8
        assert result["y_nilpotent"]
        assert result["y_on_d"] == {"(0, 0)": "-1"}

    def test_i_nat(self, fld: GlobalField) -> None:
        pushed = run(fld, "i_nat", module={"fiber_dim": 2}, caps={"d": 4})
        assert pushed == {"source": "i_plus", "dim": 2}
        connection = run(fld, "i_nat", module={"vars": 1, "rank": 1})
        assert connection == {"source": "connection", "dim": 0}

    def test_kashiwara_roundtrip(self, fld: GlobalField) -> None:
        params = {"dims": [1, 2], "d_caps": [4]}
        result = run(fld, "kashiwara_roundtrip", params=params)
        assert result["verdict"] == "PASS"
        assert len(result["results"]) == 2
        assert result["connection_restrict_dim"] == 0

    def test_f_shriek(self, fld: GlobalField) -> None:
        module = {"vars": 1, "rank": 1, "theta": [[["x"]]]}
        result = run(
            fld, "f_shriek", module=module, caps={"deg": 4}, params={"point": [5]}
        )
        assert result["point"]["dims"] == {"0": 0, "1": 1}
        assert result["projection"]["shift"] == 1
        assert result["composition"]["verdict"] == "PASS"

    def test_dual(self, fld: GlobalField) -> None:
        module = {"vars": 1, "rank": 1, "theta": [[["2*x"]]]}
        result = run(fld, "dual", module=module)
        assert result["verdict"] == "PASS"
        assert result["samples"] == 0

    def test_side_change(self, wide: GlobalField) -> None:
        result = run(wide, "side_change", params={"samples": 2, "rank": 1})
        assert result["modules"] == 3
        assert result["roundtrip"] == "PASS"
        assert result["associativity"] == "PASS"
        assert result["double_dual"] == "PASS"

    def test_tensor(self, fld: GlobalField) -> None:
        modules = [
            {"vars": 1, "rank": 1, "theta": [[["x"]]]},
            {"vars": 1, "rank": 1, "theta": [[["1/5"]]]},
        ]
        params = {"random_pairs": 1, "vars": 1}
        result = run(fld, "tensor", modules=modules, params=params)
        assert result["flat"]
        assert result["adds_forms"]
        assert result["random_flat"] == 1

    def test_division(self, wide: GlobalField) -> None:
        result = run(wide, "division", params={"samples": 5, "level": 2})
        assert result["exact"] == 5
        assert result["verdict"] == "PASS"

    def test_spencer(self, wide: GlobalField) -> None:
        params = {"vars": [1]}
        result = run(wide, "spencer", caps={"deg": 4, "order": 3}, params=params)
        assert result["1"]["exact"]
        assert result["verdict"] == "PASS"

    def test_coadmissibility(self, fld: GlobalField) -> None:
        module = {"cyclic": "d1 - 1", "level": 3}
        params = {"top": 3, "perturb_stage": 2}
        result = run(fld, "coadmissibility", module=module, params=params)
        assert result["levels"] == [3, 2, 1, 0]
        assert result["tower"]["verdict"] == "PASS"
        assert result["perturbed"]["verdict"] == "FAIL"
        assert result["perturbed"]["failed_stage"] == 2
        assert result["tower"]["integral"] == [True, True, True, True]

    def test_prenuclear(self, wide: GlobalField) -> None:
        result = run_scenario(load_scenario("prenuclear_kx_tower"), wide, (4,))
        assert result["result"]["kx_tower"]["passed"]
        assert not result["result"]["violation"]["passed"]

    def test_roos(self, wide: GlobalField) -> None:
        result = run_scenario(load_scenario("roos_kx_tower"), wide, (4,))
        assert result["result"]["exact"]
        assert result["result"]["verdict"] == "PASS"
