"""Run configuration, the stage pipeline, checkpoints, reports and the command line."""

from .audit import AuditReport, audit_triple, dissipation_audit
from .checkpoint import CheckpointStore, read_series, write_series
from .config import DEFAULTS, RunConfig
from .report import RunReport, ledger_block, read_series_csv, write_series_csv
from .runner import audit_run, build_seed, compare_profiles, prepare_mikado, run, verify_operators
from .stages import (
    AssembleStage,
    GlueStage,
    LedgerStage,
    LevelState,
    MollifyStage,
    PerturbStage,
    PumpStage,
)

__all__ = [
    "DEFAULTS",
    "AssembleStage",
    "AuditReport",
    "CheckpointStore",
    "GlueStage",
    "LedgerStage",
    "LevelState",
    "MollifyStage",
    "PerturbStage",
    "PumpStage",
    "RunConfig",
    "RunReport",
    "audit_run",
    "audit_triple",
    "build_seed",
    "compare_profiles",
    "dissipation_audit",
    "ledger_block",
    "prepare_mikado",
    "read_series",
    "read_series_csv",
    "run",
    "verify_operators",
    "write_series",
    "write_series_csv",
]
