#!/usr/bin/env python3
"""Run reports: ledger blocks per level, YAML document, CSV series and digest."""

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
import yaml

from ..ledger import Ledger
from ..logger import get_logger
from ..schedule.params import TWO_PI
from ..schedule.profile import EnergyProfile
from ..spectral.holder import ledger_norm
from ..state import ReynoldsTriple
from ..utils import plain_data
from .audit import AuditReport, dissipation_audit

logger = get_logger(__name__)

REPORT_NAME = "report.yaml"
CSV_COLUMNS = ("t", "kinetic_energy", "target_e", "dissipation_integral", "e_tot", "R_norm_0", "v_norm_1")


def ledger_block(ledgers: Mapping[str, Ledger], metadata: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """Serializable block for one level: every stage ledger, counts and step metadata."""
    stages = {name: ledger.to_list() for name, ledger in ledgers.items()}
    counts = {"total": 0, "passed": 0, "soft_failures": 0, "hard_failures": 0}
    for ledger in ledgers.values():
        for key, value in ledger.summary().items():
            counts[key] += value
    return plain_data({"stages": stages, "summary": counts, "metadata": dict(metadata or {})})


def level_series(triple: ReynoldsTriple, profile: EnergyProfile) -> Dict[str, np.ndarray]:
    """The CSV columns for one triple."""
    audit: AuditReport = dissipation_audit(triple.v, triple.nu, triple.gamma, profile)
    return {
        "t": audit.times,
        "kinetic_energy": audit.kinetic_energy,
        "target_e": np.asarray(profile(audit.times), dtype=np.float64),
        "dissipation_integral": audit.dissipation_integral,
        "e_tot": audit.e_tot,
        "R_norm_0": triple.R.scalar(lambda f: f.sup_norm()),
        "v_norm_1": triple.v.scalar(lambda f: ledger_norm(f, 1.0, scale=TWO_PI)),
    }


def write_series_csv(path: Path, columns: Mapping[str, np.ndarray]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for row in zip(*(columns[name] for name in CSV_COLUMNS)):
            writer.writerow([repr(float(x)) for x in row])
    return path


def read_series_csv(path: Path) -> Dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    return {name: np.array([float(row[name]) for row in rows]) for name in CSV_COLUMNS}


def canonical_yaml(document: Mapping[str, Any]) -> str:
    return yaml.safe_dump(plain_data(document), sort_keys=True, default_flow_style=False)


@dataclass
class RunReport:
    """Everything a run produced except the fields themselves.

    ``timing`` and ``provenance`` are excluded from the digest, so two runs of
    the same configuration share a digest.
    """

    config: Dict[str, Any]
    levels: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    mikado: Dict[str, Any] = field(default_factory=dict)
    grid: Dict[str, Any] = field(default_factory=dict)
    seed: Dict[str, Any] = field(default_factory=dict)
    timing: Dict[str, Any] = field(default_factory=dict)
    provenance: Dict[str, Any] = field(default_factory=dict)
    final: Optional[ReynoldsTriple] = field(default=None, repr=False, compare=False)

    def summary(self) -> Dict[str, Any]:
        counts = {"total": 0, "passed": 0, "soft_failures": 0, "hard_failures": 0}
        for block in self.levels.values():
            for key in counts:
                counts[key] += int(block["summary"][key])
        for key in counts:
            counts[key] += int(self.seed.get("summary", {}).get(key, 0))
        return {**counts, "levels": len(self.levels), "passed_hard": counts["hard_failures"] == 0}

    @property
    def passed(self) -> bool:
        return bool(self.summary()["passed_hard"])

    def failures(self, hard_only: bool = False) -> List[Dict[str, Any]]:
        """Every failed ledger line across levels."""
        failed = []
        for block in self.levels.values():
            for lines in block["stages"].values():
                failed.extend(
                    line for line in lines if not line["passed"] and (line["hard"] or not hard_only)
                )
        return failed

    def to_dict(self, volatile: bool = True) -> Dict[str, Any]:
        document: Dict[str, Any] = {
            "config": self.config,
            "grid": self.grid,
            "mikado": self.mikado,
            "seed": self.seed,
            "levels": self.levels,
            "summary": self.summary(),
        }
        if volatile:
            document["timing"] = self.timing
            document["provenance"] = self.provenance
        return plain_data(document)

    def digest(self) -> str:
        """SHA-256 over the canonical YAML without timing and provenance."""
        return hashlib.sha256(canonical_yaml(self.to_dict(volatile=False)).encode("utf-8")).hexdigest()

    def write(self, out: Path) -> Path:
        out.mkdir(parents=True, exist_ok=True)
        document = self.to_dict()
        document["digest"] = self.digest()
        path = out / REPORT_NAME
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(document, f, sort_keys=False)
        logger.info(f"report written to {path} (digest {document['digest'][:12]})")
        return path


def digest_config(raw: Mapping[str, Any]) -> Dict[str, Any]:
    """Configuration as it enters the digest: without scenario, pools and output paths."""
    config = {k: v for k, v in raw.items() if k not in ("scenario", "concurrency")}
    config["run"] = {k: v for k, v in dict(raw.get("run", {})).items() if k != "out"}
    return plain_data(config)


def load_report(path: Path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        document: Dict[str, Any] = yaml.safe_load(f)
    return document
