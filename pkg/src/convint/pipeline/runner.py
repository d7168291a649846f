#!/usr/bin/env python3
"""Run orchestration: seed, level loop over the registered stages, checkpoints and reports."""

import time
import uuid
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
import psutil
import yaml

from tools.concurrency import get_pool_manager

from .. import __version__
from ..errors import CheckpointError, ConvintError, ParameterError, StageError
from ..ledger import Ledger
from ..logger import get_logger, set_log_file
from ..manager import StageManager, get_manager
from ..mikado.family import build_family
from ..mikado.fourier import MikadoFourier, compute_M, fourier_data, lattice_tail, write_descriptor
from ..run_logger import ComponentType, LogLevel, get_run_logger, init_run_logging
from ..schedule.params import TWO_PI, IterationParams
from ..schedule.profile import EnergyProfile, dissipation_gate
from ..schedule.seed import SeedTriple, seed_from_euler_field, zero_seed
from ..solver.fns import solve_fns
from ..solver.stability import shear_velocity
from ..spectral.field import PeriodicField, Rank
from ..spectral.grid import Grid
from ..spectral.random_fields import random_divergence_free
from ..state import ReynoldsTriple, TimeSeries, field_digest, random_test_fields
from ..tolerances import get_tolerances
from ..utils import deep_merge, plain_data
from .audit import AuditReport, dissipation_audit
from .checkpoint import CheckpointStore
from .config import RunConfig
from .report import RunReport, digest_config, ledger_block, level_series, write_series_csv
from .stages import LevelState

logger = get_logger(__name__)

CHECKPOINTS = "checkpoints"
MIKADO_DESCRIPTOR = "mikado.yaml"

STAGE_COMPONENTS = {
    "mollify": ComponentType.GLUING,
    "glue": ComponentType.GLUING,
    "pump": ComponentType.PERTURBATION,
    "perturb": ComponentType.PERTURBATION,
    "assemble": ComponentType.PERTURBATION,
    "ledger": ComponentType.PIPELINE,
}


def apply_tolerances(values: Mapping[str, float]) -> None:
    """Apply the ``tolerances`` config section.

    Raises:
        ParameterError: If a name is not a known tolerance
    """
    try:
        get_tolerances().override(dict(values))
    except KeyError as e:
        raise ParameterError(str(e)) from e


def prepare_mikado(config: RunConfig, out: Path) -> Tuple[MikadoFourier, MikadoFourier, IterationParams]:
    """Family, its Fourier data, the truncation used by the perturbation and the params with M."""
    mikado = config.mikado
    family = build_family(int(mikado.get("quadrature_n", 64)))
    fourier = fourier_data(
        family, int(mikado.get("k_max", 16)), int(mikado.get("samples", 100)), int(mikado.get("seed", 0))
    )
    truncated = fourier.truncated(int(config.perturbation.get("k_max", 3)))
    params = config.params if config.explicit_M else config.params.with_M(compute_M(fourier))
    write_descriptor(out / MIKADO_DESCRIPTOR, fourier, truncated)
    logger.info(f"M = {params.M:.4e} ({'configured' if config.explicit_M else 'computed'})")
    return fourier, truncated, params


def _seed_field(grid: Grid, spec: Mapping[str, Any], seed: int) -> PeriodicField:
    kind = spec.get("kind", "zero")
    amplitude = float(spec.get("amplitude", 0.1))
    if kind == "random":
        rng = np.random.default_rng(int(spec.get("seed", seed)))
        return random_divergence_free(grid, rng, k_max=int(spec.get("k_max", 2))) * amplitude
    if kind == "shear":
        return shear_velocity(grid, amplitude, int(spec.get("mode", 1)))
    return PeriodicField.zeros(grid, Rank.VECTOR)


def build_seed(config: RunConfig, params: IterationParams, times: np.ndarray) -> SeedTriple:
    """The level-0 triple (zero seed) or a mollified Euler seed at ``scenario.level``.

    The Euler field is evolved with ν = 0 on the run time grid before mollification.
    """
    grid = config.grid
    if config.scenario["kind"] == "zero":
        return zero_seed(grid, times, params)
    u0 = _seed_field(grid, config.scenario.get("field", {}), config.seed)
    if u0.sup_norm() == 0.0:
        v = TimeSeries(times, [u0] * len(times), name="v_euler")
    else:
        solved = solve_fns(u0, 0.0, params.gamma, config.solver, float(times[0]), output_times=times)
        v = solved.v
    beta_prime = config.scenario.get("beta_prime")
    return seed_from_euler_field(
        v, params, int(config.scenario.get("level", 0)), float(beta_prime) if beta_prime is not None else None
    )


def _seed_block(seed: SeedTriple, profile_ledger: Optional[Ledger]) -> Dict[str, Any]:
    ledger = Ledger(level=seed.level, stage="seed")
    ledger.extend(seed.ledger)
    if profile_ledger is not None:
        ledger.extend(profile_ledger)
    return plain_data({"level": seed.level, "ledger": ledger.to_list(), "summary": ledger.summary()})


def _mikado_block(fourier: MikadoFourier, truncated: MikadoFourier, params: IterationParams) -> Dict[str, Any]:
    return plain_data(
        {
            "M_bar": fourier.M_bar,
            "M": params.M,
            "k_max": fourier.k_max,
            "lattice_tail": lattice_tail(fourier.k_max),
            "decay": fourier.metadata.get("decay", {}),
            "truncation": {
                "k_max": truncated.k_max,
                "tail_l1": truncated.tail_l1,
                "cross_direction": truncated.metadata.get("cross_direction"),
                "energy": truncated.metadata.get("energy"),
                "retained_energy": truncated.metadata.get("retained_energy"),
                "owned_modes": truncated.metadata.get("owned_modes"),
                "k_max_for_energy": truncated.metadata.get("k_max_for_energy"),
            },
        }
    )


def _level_metadata(state: LevelState) -> Dict[str, Any]:
    metadata: Dict[str, Any] = {}
    if state.report is not None:
        metadata.update(state.report.metadata)
    if state.mollified is not None:
        metadata["under_resolved"] = bool(state.mollified.metadata.get("under_resolved", False))
    if state.bundle is not None:
        metadata["top_frequency"] = state.bundle.metadata.get("top_frequency")
        metadata["frequency"] = state.bundle.frequency
    if state.glued is not None:
        metadata["intervals"] = state.glued.partition.count
    return metadata


def run_level(
    state: LevelState, stages: List[Any], operation_id: str  # type: ignore[ANN401]
) -> LevelState:
    """Run every stage on the level state.

    Raises:
        StageError: Wrapping the first hard abort, with level and stage
    """
    run_log = get_run_logger()
    for stage in stages:
        if not stage.is_applicable(state):
            logger.info(f"level {state.level}: stage {stage.name} disabled")
            continue
        component = STAGE_COMPONENTS.get(stage.name, ComponentType.PIPELINE)
        run_log.log_stage_start(component, stage.name, operation_id, {"level": state.level})
        started = time.monotonic()
        try:
            state = stage.run(state)
        except ConvintError as e:
            run_log.log_stage_error(component, stage.name, operation_id, str(e))
            logger.error(f"level {state.level}: stage {stage.name} aborted: {e}")
            raise StageError(state.level, stage.name, e) from e
        finally:
            stage.cleanup()
        run_log.log_stage_success(component, stage.name, operation_id, time.monotonic() - started)
        ledger = state.ledgers.get(stage.name)
        for line in ledger or []:
            if not line.passed:
                run_log.log_ledger_line(component, line, operation_id)
    return state


def run(
    config: RunConfig,
    resume: bool = False,
    manager: Optional[StageManager] = None,
) -> RunReport:
    """Iterate the scheme from the seed over ``q_max + 1`` levels.

    Raises:
        StageError: If a stage aborts, naming its level and stage
        CheckpointError: If ``resume`` finds checkpoints of another configuration
    """
    started = time.monotonic()
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    run_log = init_run_logging(out / "logs")
    set_log_file(out / "logs" / "convint.log")
    operation_id = uuid.uuid4().hex[:8]
    apply_tolerances(config.tolerances)
    pool = get_pool_manager(overrides=config.concurrency or None)
    manager = manager or get_manager()

    fourier, truncated, params = prepare_mikado(config, out)
    times = config.times()
    seed = build_seed(config, params, times)
    configured, profile_ledger = config.build_profile()
    profile: EnergyProfile = seed.profile if seed.profile is not None else configured
    tests = random_test_fields(config.grid, config.test_fields, config.seed)
    levels = range(seed.level, seed.level + config.q_max + 1)

    store = CheckpointStore(out / CHECKPOINTS, config.grid.dealias_fraction)
    store.begin(digest_config(config.raw), resume)
    blocks: Dict[str, Dict[str, Any]] = {}
    triple: ReynoldsTriple = seed.triple
    completed = [q for q in store.completed_levels() if q in levels] if resume else []
    if completed:
        for q in completed:
            block = store.level_block(q)
            if block is not None:
                blocks[str(q)] = block
        triple = store.read_triple(completed[-1] + 1)
        logger.info(f"resuming after level {completed[-1]} from {store.root}")

    stages = manager.pipeline(config.raw.get("stages"), pool)
    timing: Dict[str, Any] = {}
    for q in levels:
        if q in completed:
            continue
        level_started = time.monotonic()
        state = LevelState(
            level=q,
            triple=triple,
            params=params,
            profile=profile,
            solver=config.solver,
            fourier=fourier,
            truncated=truncated,
            tests=tests,
            eta_fractions=dict(config.perturbation.get("eta", {})),
        )
        state = run_level(state, stages, operation_id)
        blocks[str(q)] = ledger_block(state.ledgers, _level_metadata(state))
        write_series_csv(out / f"level_{q}.csv", level_series(state.next_triple, profile))
        store.complete_level(q, state.next_triple, blocks[str(q)])
        # continue from the stored triple so a resumed run sees the same data
        triple = store.read_triple(q + 1)
        timing[str(q)] = time.monotonic() - level_started
        timing[f"rss_after_{q}"] = psutil.Process().memory_info().rss
        logger.info(f"level {q} -> {q + 1} done in {timing[str(q)]:.1f}s: {blocks[str(q)]['summary']}")

    timing["total"] = time.monotonic() - started
    report = RunReport(
        config=digest_config(config.raw),
        levels=blocks,
        mikado=_mikado_block(fourier, truncated, params),
        grid={
            "n": config.grid.n,
            "dealias_fraction": config.grid.dealias_fraction,
            "samples": int(len(times)),
            "horizon_torus": float(times[-1]),
            "dissipation_gate": dissipation_gate(profile.K),
        },
        seed=_seed_block(seed, profile_ledger),
        timing=timing,
        provenance={
            "version": __version__,
            "finished": datetime.now().isoformat(),
            "operation_id": operation_id,
            "scenario": seed.describe(),
            "resumed_levels": completed,
            "config": config.to_dict(),
            "pools": pool.get_status(),
            "host": {"cpus": psutil.cpu_count(logical=False), "memory": psutil.virtual_memory().total},
        },
        final=triple,
    )
    report.write(out)
    summary = report.summary()
    level = LogLevel.SUCCESS if report.passed else LogLevel.ERROR
    run_log.log(ComponentType.PIPELINE, level, f"run finished: {summary}", operation_id)
    return report


def compare_profiles(config: RunConfig, other_profile: Mapping[str, Any]) -> Dict[str, Any]:
    """Two runs that differ only in the energy profile.

    With e₁(0) = e₂(0) the new velocities share their initial data while the
    kinetic energies separate for t > 0.
    """
    raw_first = deep_merge(config.raw, {"run": {"out": str(config.out / "first")}})
    raw_second = deep_merge(config.raw, {"run": {"out": str(config.out / "second")}})
    raw_second["profile"] = dict(other_profile)
    first = run(RunConfig.from_mapping(raw_first))
    second = run(RunConfig.from_mapping(raw_second))
    if first.final is None or second.final is None:
        raise CheckpointError("comparison runs produced no final triple")

    a, b = first.final, second.final
    energy_a = a.v.scalar(lambda f: f.mean_square())
    energy_b = b.v.scalar(lambda f: f.mean_square())
    separation = np.abs(energy_a - energy_b)
    first_level = min(first.levels, key=int)
    targets = [
        first.levels[first_level]["metadata"].get("initial_energy_target"),
        second.levels[first_level]["metadata"].get("initial_energy_target"),
    ]
    digests = [field_digest(a.v[0]), field_digest(b.v[0])]
    comparison = plain_data(
        {
            "initial_targets": targets,
            "initial_digests": digests,
            "initial_data_match": digests[0] == digests[1],
            "energy_separation_max": float(np.max(separation[1:])) if len(separation) > 1 else 0.0,
            "energy_separation_end": float(separation[-1]),
            "times": (a.times / TWO_PI).tolist(),
            "report_digests": [first.digest(), second.digest()],
        }
    )
    path = config.out / "comparison.yaml"
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(comparison, f, sort_keys=False)
    logger.info(
        f"profile comparison: initial data {'match' if comparison['initial_data_match'] else 'differ'}, "
        f"max energy separation {comparison['energy_separation_max']:.3e}"
    )
    return comparison


def audit_run(out: Path, level: Optional[int] = None, profile: Optional[EnergyProfile] = None) -> AuditReport:
    """Dissipation audit of a stored triple (default: the last one written).

    Raises:
        CheckpointError: If the run directory holds no checkpoints
    """
    store = CheckpointStore(out / CHECKPOINTS)
    completed = store.completed_levels()
    if level is None:
        if not completed:
            raise CheckpointError(f"no completed levels under {store.root}")
        level = completed[-1] + 1
    triple = store.read_triple(level)
    report = dissipation_audit(triple.v, triple.nu, triple.gamma, profile)
    path = out / f"audit_level_{level}.yaml"
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(plain_data({"level": level, **report.to_dict()}), f, sort_keys=False)
    return report


def verify_operators(
    grid: Grid, seed: int = 0, names: Optional[List[str]] = None, manager: Optional[StageManager] = None
) -> Dict[str, Ledger]:
    """Run the registered property suites."""
    manager = manager or get_manager()
    selected = names or list(manager.list_suites())
    results: Dict[str, Ledger] = {}
    for name in selected:
        suite = manager.get_suite(name)
        started = time.monotonic()
        results[name] = suite(grid, seed)
        logger.info(f"suite {name}: {results[name].summary()} ({time.monotonic() - started:.1f}s)")
    return results
