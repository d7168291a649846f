"""Property suites through the stage manager and the dissipation audit of finished runs."""

import numpy as np
import pytest
import yaml

from convint.errors import CheckpointError
from convint.manager import StageManager
from convint.pipeline.cli import EXIT_OK, main
from convint.pipeline.config import RunConfig
from convint.pipeline.runner import audit_run, run, verify_operators
from convint.schedule.profile import dissipation_gate
from convint.spectral.grid import Grid

FAST_SUITES = ["operator_identities", "holder_product", "holder_interpolation", "calderon_zygmund"]
SLOW_SUITES = [
    "mikado",
    "local_solver",
    "transport_estimates",
    "commutator",
    "fractional_holder",
    "stationary_phase",
]


@pytest.fixture(scope="module")
def grid() -> Grid:
    return Grid(32)


def test_every_registered_suite_is_covered():
    assert set(StageManager().list_suites()) == set(FAST_SUITES) | set(SLOW_SUITES)


@pytest.mark.parametrize("name", FAST_SUITES)
def test_fast_suites_hold(grid, name):
    ledger = verify_operators(grid, seed=0, names=[name])[name]
    assert len(ledger) > 0
    assert ledger.failures(hard_only=True) == []


def test_holder_constants(grid):
    results = verify_operators(grid, seed=1, names=["holder_product", "holder_interpolation"])
    assert results["holder_product"].find("holder.product").passed
    assert results["holder_interpolation"].find("holder.interpolation").passed


@pytest.mark.slow
@pytest.mark.parametrize("name", SLOW_SUITES)
def test_slow_suites_hold(grid, name):
    ledger = verify_operators(grid, seed=0, names=[name])[name]
    assert len(ledger) > 0
    assert ledger.failures(hard_only=True) == []


@pytest.mark.slow
def test_suite_thresholds(grid):
    results = verify_operators(grid, seed=3, names=["local_solver", "commutator", "stationary_phase"])
    assert results["local_solver"].find("solver.shear_decay").lhs < 1e-8
    assert 3.7 <= results["local_solver"].find("solver.rk_order.lower").lhs <= 4.3
    assert 1.8 <= results["commutator"].find("commutator.slope.lower").lhs <= 2.2
    for name, identifier in [("local_solver", "solver.rk_order"), ("commutator", "commutator.slope")]:
        assert results[name].find(f"{identifier}.lower").passed
        assert results[name].find(f"{identifier}.upper").passed
    assert results["stationary_phase"].find("stationary_phase.integral_decay").lhs >= 3.0


def test_verify_command_writes_ledgers(tmp_path, capsys):
    out = tmp_path / "verify"
    assert main(["verify-operators", "--suite", "operator_identities", "--grid", "16", "--out", str(out)]) == EXIT_OK
    with open(out / "verify.yaml", encoding="utf-8") as f:
        stored = yaml.safe_load(f)
    identifiers = {line["identifier"] for line in stored["operator_identities"]}
    assert "operators.semigroup" in identifiers
    assert "hard_failures: 0" in capsys.readouterr().out


class TestDissipationAudit:
    def test_audit_needs_checkpoints(self, tmp_path):
        with pytest.raises(CheckpointError):
            audit_run(tmp_path)

    @pytest.mark.slow
    def test_smoke_run_audit(self, smoke_run):
        config, _ = smoke_run
        profile, _ = config.build_profile()
        report = audit_run(config.out, profile=profile)
        assert len(report.times) == len(config.times())
        np.testing.assert_allclose(report.target_e, profile(report.times))
        assert report.dissipation_integral[0] == 0.0
        with open(config.out / "audit_level_1.yaml", encoding="utf-8") as f:
            assert yaml.safe_load(f)["level"] == 1

    @pytest.mark.slow
    def test_decreasing_profile_run_loses_energy(self, smoke_config):
        # K = 10 passes the dissipation gate; the horizon stays inside the linear drop [0, 1/(4K)]
        smoke_config["profile"] = {"kind": "decreasing", "K": 10.0}
        smoke_config["run"]["horizon"] = 0.02
        smoke_config["run"]["samples_per_tau"] = 16
        config = RunConfig.from_mapping(smoke_config)
        run(config)
        profile, _ = config.build_profile()
        report = audit_run(config.out, profile=profile)
        assert dissipation_gate(10.0)["passed"]
        assert profile(config.horizon) < profile(0.0)
        assert report.e_tot[-1] < report.e_tot[0]
        assert report.worst_pair[0] <= report.worst_pair[1]
