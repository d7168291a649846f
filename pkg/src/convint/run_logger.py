#!/usr/bin/env python3
"""Structured run-event logging for pipeline components."""

import json
import threading
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, Optional

if TYPE_CHECKING:
    from .ledger import LedgerLine


class LogLevel(Enum):
    """Log levels for different types of events."""

    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    SUCCESS = "SUCCESS"


class ComponentType(Enum):
    """Component types for better organization."""

    SPECTRAL = "spectral"
    OPERATORS = "operators"
    SCHEDULE = "schedule"
    SOLVER = "solver"
    GLUING = "gluing"
    MIKADO = "mikado"
    PERTURBATION = "perturbation"
    PIPELINE = "pipeline"


_LEVEL_TAGS = {
    LogLevel.DEBUG: "[..]",
    LogLevel.INFO: "[--]",
    LogLevel.WARNING: "[!!]",
    LogLevel.ERROR: "[XX]",
    LogLevel.SUCCESS: "[ok]",
}


class RunEventLogger:
    """Writes every run event as a readable line, a JSONL record and a per-component line."""

    def __init__(self, base_dir: Optional[Path] = None) -> None:
        """Initialize the event logger.

        Args:
            base_dir: Directory for log files (default: ./logs)
        """
        self.base_dir = base_dir or Path("logs")
        self.base_dir.mkdir(parents=True, exist_ok=True)

        today = datetime.now().strftime("%Y-%m-%d")
        self.readable_file = self.base_dir / f"convint_{today}.log"
        self.json_file = self.base_dir / f"convint_{today}.jsonl"

        self.component_files: Dict[ComponentType, Path] = {}
        self._lock = threading.Lock()

    def log(
        self,
        component: ComponentType,
        level: LogLevel,
        message: str,
        operation_id: Optional[str] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> Dict[str, Any]:
        """Log an event with unified formatting.

        Returns:
            The JSON entry that was written
        """
        timestamp = datetime.now()
        entry = {
            "timestamp": timestamp.isoformat(),
            "component": component.value,
            "level": level.value,
            "message": message,
            "operation_id": operation_id,
            "metadata": metadata or {},
        }

        time_str = timestamp.strftime("%H:%M:%S")
        component_str = f"[{component.value.upper()}]".ljust(15)
        op_str = f"({operation_id})" if operation_id else ""
        readable_line = (
            f"{time_str} {_LEVEL_TAGS[level]} {component_str} {message} {op_str}"
        ).rstrip()

        with self._lock:
            self._append(self.readable_file, readable_line)
            self._append(self.json_file, json.dumps(entry, default=str))
            self._append(self._component_file(component), readable_line)
        return entry

    @staticmethod
    def _append(path: Path, line: str) -> None:
        with open(path, "a", encoding="utf-8") as f:
            f.write(f"{line}\n")

    def _component_file(self, component: ComponentType) -> Path:
        if component not in self.component_files:
            component_dir = self.base_dir / component.value
            component_dir.mkdir(parents=True, exist_ok=True)
            today = datetime.now().strftime("%Y-%m-%d")
            self.component_files[component] = component_dir / f"{today}.log"
        return self.component_files[component]

    def log_stage_start(
        self,
        component: ComponentType,
        stage: str,
        operation_id: str,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> None:
        """Log the start of a pipeline stage."""
        self.log(component, LogLevel.INFO, f"Starting {stage}", operation_id, metadata)

    def log_stage_success(
        self,
        component: ComponentType,
        stage: str,
        operation_id: str,
        duration: Optional[float] = None,
    ) -> None:
        """Log successful completion of a stage."""
        duration_str = f" ({duration:.1f}s)" if duration else ""
        self.log(
            component,
            LogLevel.SUCCESS,
            f"Completed {stage}{duration_str}",
            operation_id,
        )

    def log_stage_error(
        self, component: ComponentType, stage: str, operation_id: str, error: str
    ) -> None:
        """Log a stage abort."""
        self.log(component, LogLevel.ERROR, f"Failed {stage}: {error}", operation_id)

    def log_ledger_line(
        self, component: ComponentType, line: "LedgerLine", operation_id: str
    ) -> None:
        """Log one evaluated inequality; failures are warnings."""
        level = LogLevel.INFO if line.passed else LogLevel.WARNING
        self.log(
            component,
            level,
            f"{line.identifier}: {line.lhs:.4e} {line.relation} {line.rhs:.4e}",
            operation_id,
            line.to_dict(),
        )

    def tail(self, lines: int = 50) -> list[str]:
        """Return the most recent readable log lines."""
        if not self.readable_file.exists():
            return []
        with open(self.readable_file, "r", encoding="utf-8") as f:
            all_lines = f.read().splitlines()
        return all_lines[-lines:]


# Global logger instance
_global_logger: Optional[RunEventLogger] = None


def get_run_logger() -> RunEventLogger:
    """Get the global run-event logger instance."""
    global _global_logger
    if _global_logger is None:
        _global_logger = RunEventLogger()
    return _global_logger


def init_run_logging(base_dir: Optional[Path] = None) -> RunEventLogger:
    """Initialize run-event logging under a directory."""
    global _global_logger
    _global_logger = RunEventLogger(base_dir)
    _global_logger.log(
        ComponentType.PIPELINE, LogLevel.INFO, "convint run logging initialized"
    )
    return _global_logger
