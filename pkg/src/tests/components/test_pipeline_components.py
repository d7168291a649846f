"""Run configuration, checkpoints, reports and the dissipation audit."""

import json
import math

import numpy as np
import pytest
import yaml

from convint.errors import CheckpointError, ParameterError
from convint.ledger import Ledger
from convint.pipeline.audit import audit_triple, dissipation_audit, pairwise_margins
from convint.pipeline.checkpoint import CheckpointStore, config_digest
from convint.pipeline.config import RunConfig
from convint.pipeline.report import (
    CSV_COLUMNS,
    RunReport,
    digest_config,
    ledger_block,
    level_series,
    load_report,
    read_series_csv,
    write_series_csv,
)
from convint.schedule.params import TWO_PI, delta, level_values
from convint.schedule.profile import constant_profile
from convint.solver.stability import shear_velocity
from convint.spectral.field import Rank
from convint.spectral.random_fields import random_band_limited, random_divergence_free
from convint.state import ReynoldsTriple, TimeSeries, zero_triple


def random_triple(grid, rng, times) -> ReynoldsTriple:
    return ReynoldsTriple(
        v=TimeSeries(times, [random_divergence_free(grid, rng, k_max=2) for _ in times], name="v"),
        p=TimeSeries(times, [random_band_limited(grid, Rank.SCALAR, rng) for _ in times], name="p"),
        R=TimeSeries(times, [random_band_limited(grid, Rank.SYMTENSOR, rng) for _ in times], name="R"),
        nu=0.0123,
        gamma=0.2,
        level=1,
        metadata={"stage": "assemble"},
    )


class TestRunConfig:
    def test_defaults(self, tmp_path):
        config = RunConfig.from_mapping({"run": {"out": str(tmp_path)}})
        assert config.grid.n == 64
        assert config.params.a == 4.0
        assert list(config.levels) == [0]
        assert not config.explicit_M
        assert config.solver.alpha == config.params.alpha

    def test_overrides_win_and_none_is_ignored(self, smoke_config):
        config = RunConfig.from_mapping(smoke_config, {"run": {"q_max": 1}, "grid": None})
        assert config.q_max == 1
        assert config.grid.n == 32
        assert list(config.levels) == [0, 1]

    @pytest.mark.parametrize(
        "values",
        [
            {"extra": {}},
            {"scenario": {"kind": "vortex"}},
            {"scenario": {"field": {"kind": "spiral"}}},
            {"run": {"q_max": -1}},
            {"run": {"horizon": 0.0}},
            {"run": {"samples_per_tau": 1}},
            {"params": {"b": 1.5}},
            {"perturbation": {"k_max": 0}},
        ],
    )
    def test_rejects(self, values):
        with pytest.raises(ParameterError):
            RunConfig.from_mapping(values)

    def test_euler_seed_starts_at_its_level(self, smoke_config):
        smoke_config["scenario"] = {"kind": "euler_seed", "level": 2, "field": {"kind": "zero"}}
        config = RunConfig.from_mapping(smoke_config)
        assert list(config.levels) == [2]

    def test_times_resolve_the_finest_tau(self, smoke_config):
        config = RunConfig.from_mapping(smoke_config)
        times = config.times()
        tau = level_values(config.params, 0).tau_torus
        assert times[0] == 0.0
        assert times[-1] == pytest.approx(TWO_PI * 0.1)
        assert np.diff(times)[0] <= tau / config.samples_per_tau + 1e-12

    def test_profile_value_from_schedule(self, smoke_config):
        config = RunConfig.from_mapping(smoke_config)
        profile, ledger = config.build_profile()
        assert ledger is None
        assert float(profile(0.05)) == pytest.approx(delta(config.params, 1))

    def test_profile_must_cover_the_horizon(self, smoke_config):
        smoke_config["profile"] = {"kind": "constant", "value": 1.0, "horizon": 0.05}
        with pytest.raises(ParameterError):
            RunConfig.from_mapping(smoke_config).build_profile()

    def test_bad_profile_value(self, smoke_config):
        smoke_config["profile"] = {"kind": "constant", "value": "delta_one"}
        with pytest.raises(ParameterError):
            RunConfig.from_mapping(smoke_config).build_profile()

    def test_from_file(self, tmp_path, smoke_config):
        path = tmp_path / "run.json"
        path.write_text(json.dumps(smoke_config), encoding="utf-8")
        config = RunConfig.from_file(path, {"run": {"q_max": 1}})
        assert config.params.a == 2.5
        assert config.q_max == 1
        assert config.to_dict()["run"]["out"] == smoke_config["run"]["out"]


class TestCheckpoints:
    def test_triple_is_restored_exactly(self, tmp_path, grid16, rng):
        triple = random_triple(grid16, rng, np.linspace(0.0, 0.3, 4))
        store = CheckpointStore(tmp_path)
        store.write_triple(triple, 1)
        restored = store.read_triple(1)
        assert restored.nu == triple.nu and restored.level == 1
        assert restored.dvdt is None
        assert np.array_equal(restored.times, triple.times)
        for name in ("v", "p", "R"):
            for a, b in zip(getattr(restored, name), getattr(triple, name)):
                assert a.rank is b.rank
                assert np.array_equal(a.values, b.values)
        assert restored.metadata == {"stage": "assemble"}

    def test_manifest_lifecycle(self, tmp_path, grid16):
        store = CheckpointStore(tmp_path)
        store.begin({"a": 1})
        block = {"summary": {"total": 1}}
        store.complete_level(0, zero_triple(grid16, [0.0, 0.5], 0.1, 0.2), block)
        assert store.completed_levels() == [0]
        assert store.level_block(0) == block
        assert store.read_triple(1).level == 1

        store.begin({"a": 1}, resume=True)
        assert store.completed_levels() == [0]
        with pytest.raises(CheckpointError):
            store.begin({"a": 2}, resume=True)
        store.begin({"a": 2})
        assert store.completed_levels() == []

    def test_missing_and_damaged(self, tmp_path, grid16):
        store = CheckpointStore(tmp_path)
        with pytest.raises(CheckpointError):
            store.read_triple(3)
        store.write_triple(zero_triple(grid16, [0.0, 0.5], 0.1, 0.2), 0)
        (store.level_dir(0) / "v" / "series.json").write_text("{not json", encoding="utf-8")
        with pytest.raises(CheckpointError):
            store.read_triple(0)

    def test_config_digest_ignores_key_order(self):
        assert config_digest({"a": 1, "b": {"c": 2}}) == config_digest({"b": {"c": 2}, "a": 1})


class TestReports:
    @pytest.fixture
    def report(self):
        ledger = Ledger(level=0, stage="glue")
        ledger.check_le("glue.ok", 1.0, 2.0)
        ledger.check_le("glue.soft", 3.0, 2.0)
        ledger.check_le("glue.hard", 3.0, 2.0, hard=True)
        return RunReport(
            config={"params": {"a": 4.0}},
            levels={"0": ledger_block({"glue": ledger}, {"tau": 0.5})},
            timing={"level_0": 1.5},
            provenance={"host": {"cpus": 4}},
        )

    def test_summary(self, report):
        summary = report.summary()
        assert summary["total"] == 3
        assert summary["soft_failures"] == 1
        assert summary["hard_failures"] == 1
        assert not report.passed
        assert [line["identifier"] for line in report.failures(hard_only=True)] == ["glue.hard"]

    def test_digest_ignores_timing(self, report):
        digest = report.digest()
        report.timing["level_0"] = 99.0
        report.provenance["host"] = {"cpus": 64}
        assert report.digest() == digest
        report.config["params"]["a"] = 2.5
        assert report.digest() != digest

    def test_write(self, report, tmp_path):
        document = load_report(report.write(tmp_path))
        assert document["digest"] == report.digest()
        assert document["timing"] == {"level_0": 1.5}
        assert document["levels"]["0"]["metadata"] == {"tau": 0.5}

    def test_digest_config(self):
        raw = {"params": {"a": 4}, "scenario": {"kind": "zero"}, "concurrency": {"x": 1}, "run": {"out": "a", "q_max": 1}}
        assert digest_config(raw) == {"params": {"a": 4}, "run": {"q_max": 1}}

    def test_series_csv(self, grid16, tmp_path):
        triple = zero_triple(grid16, np.linspace(0.0, 0.5, 6), 0.1, 0.2)
        columns = level_series(triple, constant_profile(0.25))
        path = write_series_csv(tmp_path / "series" / "level_0.csv", columns)
        restored = read_series_csv(path)
        assert tuple(restored) == CSV_COLUMNS
        np.testing.assert_array_equal(restored["target_e"], 0.25)
        np.testing.assert_array_equal(restored["t"], np.linspace(0.0, 0.5, 6) / TWO_PI)


class TestDissipationAudit:
    def test_pairwise_margins(self):
        margin, pair = pairwise_margins(np.array([3.0, 2.0, 2.5, 1.0]))
        assert margin == pytest.approx(-0.5)
        assert pair == (1, 2)
        assert pairwise_margins(np.array([1.0])) == (0.0, (0, 0))

    def test_exact_decay_keeps_e_tot(self, grid16):
        nu, gamma, amplitude, mode = 0.2, 0.3, 0.7, 2
        times = np.linspace(0.0, 1.0, 401)
        rate = nu * mode ** (2 * gamma)
        base = shear_velocity(grid16, amplitude, mode)
        series = TimeSeries(times, [base * math.exp(-rate * t) for t in times])
        report = dissipation_audit(series, nu, gamma)
        assert report.relative_variation < 1e-5
        assert report.e_tot[0] == pytest.approx(0.25 * amplitude**2)
        assert report.kinetic_energy[-1] < report.kinetic_energy[0]

    def test_growth_is_flagged(self, grid16):
        times = np.linspace(0.0, 1.0, 5)
        base = shear_velocity(grid16, 0.5)
        report = dissipation_audit(TimeSeries(times, [base * (1.0 + t) for t in times]), 0.0, 0.2)
        assert not report.monotone
        assert report.min_margin < 0.0
        assert report.worst_pair == pytest.approx((0.0, 1.0 / TWO_PI))

    def test_zero_triple(self, grid16):
        triple = zero_triple(grid16, [0.0, 0.5, 1.0], 0.1, 0.2)
        report = audit_triple(triple, constant_profile(0.3))
        assert report.monotone
        assert report.relative_variation == 0.0
        np.testing.assert_allclose(report.target_e, 0.3)
        summary = report.to_dict()
        assert summary["samples"] == 3
        assert summary["nu_torus"] == 0.1
        assert yaml.safe_dump(summary)
