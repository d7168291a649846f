#!/usr/bin/env python3
"""Checkpoints of the iteration.

Layout under ``<out>/checkpoints``::

    manifest.json              completed levels, their ledger blocks, config digest
    level_<q>/triple.json      nu, gamma, level, metadata
    level_<q>/v/series.json    times + one snapshot per time (same for p, R, dvdt)

``level_<q>`` stores the triple at level q. A level is only listed in the
manifest after all of its files are on disk.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from ..errors import CheckpointError
from ..logger import get_logger
from ..spectral.snapshot import read_snapshot, write_snapshot
from ..state import ReynoldsTriple, TimeSeries
from ..utils import plain_data

logger = get_logger(__name__)

MANIFEST = "manifest.json"
SERIES_INDEX = "series.json"
TRIPLE_INDEX = "triple.json"
SERIES_NAMES = ("v", "p", "R", "dvdt")


def config_digest(config: Dict[str, Any]) -> str:
    """SHA-256 of the canonical YAML of a configuration mapping."""
    text = yaml.safe_dump(plain_data(config), sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_series(directory: Path, series: TimeSeries) -> Path:
    """One snapshot per sample plus ``series.json`` with the exact times."""
    directory.mkdir(parents=True, exist_ok=True)
    files: List[str] = []
    for j, sample in enumerate(series):
        name = f"{j:05d}.cvx"
        write_snapshot(directory / name, sample)
        files.append(name)
    index = {
        "name": series.name,
        # float.hex keeps the times exact
        "times": [float(t).hex() for t in series.times],
        "files": files,
    }
    with open(directory / SERIES_INDEX, "w", encoding="utf-8") as f:
        json.dump(index, f, indent=2)
    return directory


def read_series(directory: Path, dealias_fraction: float = 2.0 / 3.0) -> TimeSeries:
    """Read a series directory written by ``write_series``.

    Raises:
        CheckpointError: If the index or a snapshot is missing or damaged
    """
    index_path = directory / SERIES_INDEX
    if not index_path.exists():
        raise CheckpointError(f"missing series index {index_path}")
    try:
        with open(index_path, "r", encoding="utf-8") as f:
            index = json.load(f)
        times = np.array([float.fromhex(t) for t in index["times"]])
        files = list(index["files"])
    except (json.JSONDecodeError, KeyError, ValueError) as e:
        raise CheckpointError(f"damaged series index {index_path}: {e}") from e
    if len(files) != len(times):
        raise CheckpointError(f"{index_path}: {len(files)} snapshots for {len(times)} times")
    fields = [read_snapshot(directory / name, dealias_fraction) for name in files]
    return TimeSeries(times, fields, name=index.get("name", directory.name))


class CheckpointStore:
    """Level triples and the manifest of completed levels."""

    def __init__(self, root: Path, dealias_fraction: float = 2.0 / 3.0) -> None:
        self.root = Path(root)
        self.dealias_fraction = dealias_fraction
        self.manifest_path = self.root / MANIFEST

    def level_dir(self, level: int) -> Path:
        return self.root / f"level_{level}"

    def load_manifest(self) -> Dict[str, Any]:
        if not self.manifest_path.exists():
            return {"config_digest": None, "levels": {}}
        try:
            with open(self.manifest_path, "r", encoding="utf-8") as f:
                manifest: Dict[str, Any] = json.load(f)
        except json.JSONDecodeError as e:
            raise CheckpointError(f"damaged manifest {self.manifest_path}: {e}") from e
        manifest.setdefault("levels", {})
        return manifest

    def _save_manifest(self, manifest: Dict[str, Any]) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = self.manifest_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(plain_data(manifest), f, indent=2, sort_keys=True)
        tmp.replace(self.manifest_path)

    def write_triple(self, triple: ReynoldsTriple, level: int) -> Path:
        """Write the triple at ``level`` (materializing lazy series)."""
        directory = self.level_dir(level)
        for name in SERIES_NAMES:
            series = getattr(triple, name)
            if series is not None:
                write_series(directory / name, series)
        info = {
            "nu": float(triple.nu).hex(),
            "gamma": float(triple.gamma).hex(),
            "level": level,
            "has_dvdt": triple.dvdt is not None,
            "metadata": plain_data(triple.metadata),
        }
        with open(directory / TRIPLE_INDEX, "w", encoding="utf-8") as f:
            json.dump(info, f, indent=2)
        logger.debug(f"checkpoint for level {level} written to {directory}")
        return directory

    def read_triple(self, level: int) -> ReynoldsTriple:
        """Read the triple at ``level``.

        Raises:
            CheckpointError: If the level was never written or is damaged
        """
        directory = self.level_dir(level)
        info_path = directory / TRIPLE_INDEX
        if not info_path.exists():
            raise CheckpointError(f"no checkpoint for level {level} under {self.root}")
        with open(info_path, "r", encoding="utf-8") as f:
            info = json.load(f)
        series = {
            name: read_series(directory / name, self.dealias_fraction)
            for name in SERIES_NAMES
            if name != "dvdt" or info.get("has_dvdt")
        }
        return ReynoldsTriple(
            v=series["v"],
            p=series["p"],
            R=series["R"],
            nu=float.fromhex(info["nu"]),
            gamma=float.fromhex(info["gamma"]),
            level=int(info["level"]),
            dvdt=series.get("dvdt"),
            metadata=dict(info.get("metadata", {})),
        )

    def begin(self, config: Dict[str, Any], resume: bool = False) -> Dict[str, Any]:
        """Open the store for a run.

        Without ``resume`` any previous manifest is replaced.

        Raises:
            CheckpointError: If resuming with a different configuration
        """
        digest = config_digest(config)
        manifest = self.load_manifest() if resume else {"config_digest": None, "levels": {}}
        if resume and manifest.get("config_digest") not in (None, digest):
            raise CheckpointError(
                f"checkpoints under {self.root} were written with a different configuration"
            )
        manifest["config_digest"] = digest
        self._save_manifest(manifest)
        return manifest

    def complete_level(self, level: int, triple: ReynoldsTriple, block: Dict[str, Any]) -> None:
        """Persist the triple at ``level + 1`` and mark step ``level`` complete."""
        self.write_triple(triple, level + 1)
        manifest = self.load_manifest()
        manifest["levels"][str(level)] = block
        self._save_manifest(manifest)

    def completed_levels(self) -> List[int]:
        return sorted(int(q) for q in self.load_manifest().get("levels", {}))

    def level_block(self, level: int) -> Optional[Dict[str, Any]]:
        block: Optional[Dict[str, Any]] = self.load_manifest()["levels"].get(str(level))
        return block
