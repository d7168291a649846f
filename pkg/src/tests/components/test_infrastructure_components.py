"""Stage registry, stage base class, run-event log and configuration helpers."""

import json
import logging
from pathlib import Path

import numpy as np
import pytest
import yaml

from convint.base import BaseStage, PipelineStage, validate_stage
from convint.errors import ParameterError
from convint.ledger import Ledger
from convint.logger import get_logger, log_exception, set_log_file
from convint.manager import StageManager
from convint.run_logger import ComponentType, LogLevel, RunEventLogger, init_run_logging
from convint.utils import ConfigLoader, deep_merge, plain_data
from tools.concurrency import WorkerPoolManager

STAGES = ["mollify", "glue", "pump", "perturb", "assemble", "ledger"]


class EchoStage(BaseStage):
    name = "echo"

    def run(self, state):
        return state


def write_registry(path: Path, stages) -> Path:
    path.write_text(json.dumps({"version": "1.0.0", "pipeline": list(stages), "stages": stages, "suites": {}}))
    return path


class TestStageManager:
    def test_pipeline_order(self):
        manager = StageManager()
        assert manager.stage_order() == STAGES
        assert set(manager.list_stages()) == set(STAGES)

    def test_every_stage_is_valid(self):
        pools = WorkerPoolManager()
        stages = StageManager().pipeline({"ledger": {"enabled": False}}, pools)
        assert [stage.name for stage in stages] == STAGES
        assert all(validate_stage(stage) for stage in stages)
        assert all(stage.pool_manager is pools for stage in stages)
        assert not stages[-1].is_applicable(None)
        assert stages[0].is_applicable(None)

    def test_unknown_stage(self):
        with pytest.raises(KeyError):
            StageManager().create_stage("vortex")

    def test_suites_resolve_to_callables(self):
        manager = StageManager()
        assert "operator_identities" in manager.list_suites()
        for name in manager.list_suites():
            assert callable(manager.get_suite(name))
        with pytest.raises(KeyError):
            manager.get_suite("nope")

    def test_missing_registry_is_empty(self, tmp_path):
        manager = StageManager(tmp_path / "absent.json")
        assert manager.stage_order() == []
        assert manager.list_stages() == {}
        assert manager.list_suites() == {}

    @pytest.mark.parametrize(
        "entry_point",
        ["convint.nowhere:Stage", "convint.pipeline.stages:NoSuchStage", "builtins:slice"],
    )
    def test_bad_entry_points(self, tmp_path, entry_point):
        registry = write_registry(tmp_path / "registry.json", {"broken": {"entry_point": entry_point}})
        with pytest.raises(ParameterError):
            StageManager(registry).create_stage("broken")

    def test_reload_picks_up_changes(self, tmp_path):
        registry = write_registry(tmp_path / "registry.json", {})
        manager = StageManager(registry)
        assert manager.stage_order() == []
        write_registry(registry, {"glue": {"entry_point": "convint.pipeline.stages:GlueStage"}})
        manager.reload_registry()
        assert manager.stage_order() == ["glue"]
        assert manager.create_stage("glue").name == "glue"


class TestBaseStage:
    @pytest.mark.parametrize("value,expected", [(False, False), (True, True), ("no", True), (0, True)])
    def test_enabled_is_boolean(self, value, expected):
        stage = EchoStage({"enabled": value})
        assert stage.enabled is expected
        assert stage.is_applicable(object()) is expected

    def test_defaults(self):
        stage = EchoStage()
        assert stage.config == {}
        assert stage.pool_manager is None
        assert stage.get_config_schema()["properties"]["enabled"]["default"] is True
        stage.cleanup()
        assert isinstance(stage, PipelineStage)

    def test_config_is_copied(self):
        config = {"enabled": True}
        stage = EchoStage(config)
        stage.config["extra"] = 1
        assert "extra" not in config

    def test_plain_object_is_not_a_stage(self):
        assert not validate_stage(object())


class TestRunEventLogger:
    def test_writes_three_sinks(self, tmp_path):
        events = RunEventLogger(tmp_path)
        entry = events.log(ComponentType.GLUING, LogLevel.WARNING, "interval 2 slow", "q0", {"interval": 2})

        assert entry["component"] == "gluing"
        assert entry["metadata"] == {"interval": 2}
        record = json.loads(events.json_file.read_text().splitlines()[-1])
        assert record["message"] == "interval 2 slow"
        assert record["operation_id"] == "q0"
        readable = events.tail(1)[0]
        assert "[!!]" in readable
        assert "[GLUING]" in readable
        assert readable.endswith("(q0)")
        component_logs = list((tmp_path / "gluing").glob("*.log"))
        assert len(component_logs) == 1
        assert "interval 2 slow" in component_logs[0].read_text()

    def test_stage_events(self, tmp_path):
        events = RunEventLogger(tmp_path)
        events.log_stage_start(ComponentType.PIPELINE, "glue", "q0")
        events.log_stage_success(ComponentType.PIPELINE, "glue", "q0", duration=2.5)
        events.log_stage_error(ComponentType.PIPELINE, "pump", "q0", "EnergyGapError")
        lines = events.tail()
        assert "Starting glue" in lines[0]
        assert "Completed glue (2.5s)" in lines[1]
        assert "[XX]" in lines[2]
        assert "Failed pump: EnergyGapError" in lines[2]

    def test_ledger_lines_warn_on_failure(self, tmp_path):
        events = RunEventLogger(tmp_path)
        ledger = Ledger(level=0, stage="ledger")
        passing = ledger.check_le("energy.gap", 0.5, 1.0, hard=True)
        failing = ledger.check_le("energy.gap", 2.0, 1.0, hard=True)
        events.log_ledger_line(ComponentType.PIPELINE, passing, "q0")
        events.log_ledger_line(ComponentType.PIPELINE, failing, "q0")
        records = [json.loads(line) for line in events.json_file.read_text().splitlines()]
        assert [r["level"] for r in records] == ["INFO", "WARNING"]
        assert "energy.gap" in records[1]["message"]

    def test_tail_without_events(self, tmp_path):
        assert RunEventLogger(tmp_path / "fresh").tail() == []

    def test_init_announces_itself(self, tmp_path):
        events = init_run_logging(tmp_path)
        assert "run logging initialized" in events.tail(1)[0]


class TestLogger:
    def test_handlers_are_configured_once(self):
        first = get_logger("convint.tests.once")
        second = get_logger("convint.tests.once")
        assert first is second
        assert sum(type(h) is logging.StreamHandler for h in first.handlers) == 1
        assert not first.propagate

    def test_log_exception_records_type(self, mocker):
        logger = mocker.Mock(spec=logging.Logger)
        log_exception(logger, "glue failed", ValueError("window 3"))
        logger.error.assert_called_once_with("glue failed: ValueError: window 3", exc_info=True)

    def test_log_file_mirror(self, tmp_path):
        logger = get_logger("convint.tests.mirror")
        path = tmp_path / "logs" / "convint.log"
        set_log_file(path)
        logger.info("mirrored line")
        for handler in logger.handlers:
            handler.flush()
        assert "mirrored line" in path.read_text()
        for name in list(logging.Logger.manager.loggerDict):
            if name.startswith("convint"):
                named = logging.getLogger(name)
                for handler in list(named.handlers):
                    if isinstance(handler, logging.FileHandler) and Path(handler.baseFilename) == path.resolve():
                        named.removeHandler(handler)
                        handler.close()


class TestConfigLoader:
    def test_yaml_and_json(self, tmp_path):
        (tmp_path / "a.yaml").write_text(yaml.safe_dump({"grid": {"n": 32}}))
        (tmp_path / "b.json").write_text(json.dumps({"settings": {"grid": {"n": 16}}}))
        assert ConfigLoader.load_config(tmp_path / "a.yaml") == {"grid": {"n": 32}}
        assert ConfigLoader.load_config(tmp_path / "b.json") == {"grid": {"n": 16}}

    @pytest.mark.parametrize("name,text", [("bad.json", "{not json"), ("list.yaml", "- 1\n- 2\n"), ("bad.yaml", "a: [1,")])
    def test_unreadable_gives_empty(self, tmp_path, name, text):
        (tmp_path / name).write_text(text)
        assert ConfigLoader.load_config(tmp_path / name) == {}

    def test_missing_gives_empty(self, tmp_path):
        assert ConfigLoader.load_config(tmp_path / "absent.yaml") == {}

    def test_find_run_config(self, tmp_path):
        nested = tmp_path / "runs"
        nested.mkdir()
        assert ConfigLoader.find_run_config(nested) is None
        (tmp_path / "convint.yaml").write_text("grid: {n: 16}\n")
        assert ConfigLoader.find_run_config(nested) == tmp_path / "convint.yaml"
        assert ConfigLoader.find_run_config(tmp_path / "convint.yaml") == tmp_path / "convint.yaml"


class TestHelpers:
    def test_deep_merge(self):
        base = {"grid": {"n": 64, "dealias_fraction": 0.5}, "run": {"q_max": 0}}
        merged = deep_merge(base, {"grid": {"n": 32}, "tolerances": {"trace": 1e-6}})
        assert merged == {
            "grid": {"n": 32, "dealias_fraction": 0.5},
            "run": {"q_max": 0},
            "tolerances": {"trace": 1e-6},
        }
        assert base["grid"]["n"] == 64

    def test_plain_data_is_dumpable(self):
        data = {
            "values": np.arange(3.0),
            "peak": np.float64(2.5),
            "count": np.int64(4),
            "out": Path("runs/a"),
            "pairs": (1, np.float32(0.5)),
        }
        plain = plain_data(data)
        assert plain == {"values": [0.0, 1.0, 2.0], "peak": 2.5, "count": 4, "out": "runs/a", "pairs": [1, 0.5]}
        assert yaml.safe_load(yaml.safe_dump(plain)) == plain
