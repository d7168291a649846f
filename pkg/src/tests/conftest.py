"""Shared fixtures: small grids, seeded generators, pool and tolerance resets, a laptop-sized run config."""

from pathlib import Path
from typing import Any, Dict, Iterator, Tuple

import numpy as np
import pytest

from convint.pipeline.config import RunConfig
from convint.pipeline.report import RunReport
from convint.pipeline.runner import run
from convint.spectral.grid import Grid
from convint.tolerances import get_tolerances
from tools.concurrency import reset_for_testing

# a = 2.5 keeps λ_1 small enough for a 32³ grid to resolve the first step
SMOKE_CONFIG: Dict[str, Any] = {
    "params": {"a": 2.5},
    "grid": {"n": 32},
    "mikado": {"quadrature_n": 32, "k_max": 8, "samples": 20},
    "perturbation": {"k_max": 2},
    "run": {"q_max": 0, "horizon": 0.1, "samples_per_tau": 4, "test_fields": 5},
}


@pytest.fixture
def grid16() -> Grid:
    return Grid(16)


@pytest.fixture
def grid32() -> Grid:
    return Grid(32)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def fresh_pools() -> Iterator[None]:
    """Every test starts with the packaged pool configuration."""
    reset_for_testing()
    yield
    reset_for_testing()


@pytest.fixture(autouse=True)
def restore_tolerances() -> Iterator[None]:
    saved = get_tolerances().as_dict()
    yield
    get_tolerances().override(saved)


def smoke_mapping(out: Path) -> Dict[str, Any]:
    config = {section: dict(values) for section, values in SMOKE_CONFIG.items()}
    config["run"]["out"] = str(out)
    return config


@pytest.fixture
def smoke_config(tmp_path: Path) -> Dict[str, Any]:
    """Run configuration mapping writing under a temporary directory."""
    return smoke_mapping(tmp_path / "run")


@pytest.fixture(scope="session")
def smoke_run(tmp_path_factory: pytest.TempPathFactory) -> Tuple[RunConfig, RunReport]:
    """One finished smoke run shared by the slow tests that only read it."""
    config = RunConfig.from_mapping(smoke_mapping(tmp_path_factory.mktemp("smoke") / "run"))
    return config, run(config)
