import pytest

from yellowlight.core import ControlBounds
from yellowlight.oracle import (
    ORACLES,
    OracleResult,
    bn_oracle,
    gradient_oracle,
    maxent_normalization_oracle,
    optimizer_grid_oracle,
    run_oracles,
)


class TestOracles:
    @pytest.mark.parametrize("seed", [0, 7])
    def test_bn(self, seed):
        result = bn_oracle(n_models=20, seed=seed)
        assert result.passed, str(result)

    def test_maxent_normalization(self):
        assert maxent_normalization_oracle(seed=3).passed

    @pytest.mark.parametrize("seed", [0, 1])
    def test_gradient(self, seed):
        result = gradient_oracle(seed=seed)
        assert result.passed, str(result)

    def test_optimizer_grid(self):
        result = optimizer_grid_oracle(levels=31)
        assert result.passed, str(result)
        assert result.value >= 0.0

    def test_optimizer_grid_within_configured_bounds(self):
        result = optimizer_grid_oracle(levels=31, bounds=ControlBounds(a_min=-2.0, a_max=1.5))
        assert result.passed, str(result)

    def test_run_all(self):
        results = run_oracles(seed=2)
        assert [r.name for r in results] == [
            "bn_joint_table",
            "maxent_normalization",
            "likelihood_gradient",
            "optimizer_grid",
        ]
        assert len(results) == len(ORACLES)


class TestOracleResult:
    def test_str(self):
        passed = OracleResult("demo", True, 0.0, 1e-9)
        assert str(passed) == "PASS demo: 0.000e+00 (tolerance 1e-09)"
        assert str(OracleResult("demo", False, 0.5, 1e-3)).startswith("FAIL demo")
