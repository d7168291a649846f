#!/usr/bin/env python3
"""Gluing exact local solutions of the fractional Navier–Stokes equations.

Each v_i solves the equations forward from v_ℓ(t_i) on [t_i, t_i + 2τ]. The
glued field v̄ = Σ χ_i v_i solves the Reynolds system with

    R̊̄ = ∂_tχ_i R(v_i − v_{i+1}) − χ_i(1 − χ_i) d ⊗̊ d        on I_i
    p̄ = Σ χ_i p_i + χ_i(1 − χ_i)(|d|² − ⨍|d|²)/3           on I_i

where d = v_i − v_{i+1}; both corrections vanish off ∪ I_i. ∂_t v̄ is
assembled exactly from ∂_tχ_i and the equation satisfied by each v_i.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from tools.concurrency import WorkerPoolManager, get_pool_manager

from ..errors import ConvintError, IntervalSolveError
from ..logger import get_logger
from ..operators.multipliers import inverse_divergence
from ..schedule.params import IterationParams, level_values
from ..solver.advection import series_sampler
from ..solver.fns import SolverConfig, fns_rate, solve_fns
from ..spectral.field import PeriodicField, Rank
from ..spectral.ops import outer, traceless_outer
from ..state import ReynoldsTriple, TimeSeries
from .partition import ChiCutoffs, TimePartition, build_chi

logger = get_logger(__name__)

POOL = "interval_solves"


@dataclass
class IntervalSolution:
    """v_i and p_i on the run's sample times inside the window of χ_i."""

    index: int
    start: float
    v: TimeSeries
    p: TimeSeries
    metadata: Dict[str, Any] = field(default_factory=dict)

    def velocity(self, t: float) -> PeriodicField:
        return self.v[self.v.index_of(t)]

    def pressure(self, t: float) -> PeriodicField:
        return self.p[self.p.index_of(t)]


@dataclass
class GluedState:
    """The glued triple (v̄, p̄, R̊̄) with the pieces it was built from."""

    triple: ReynoldsTriple
    partition: TimePartition
    chi: ChiCutoffs
    solutions: List[IntervalSolution]
    mollified: ReynoldsTriple
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.triple.times

    def difference(self, i: int, t: float) -> PeriodicField:
        """v_i − v_{i+1} at t."""
        return self.solutions[i].velocity(t) - self.solutions[i + 1].velocity(t)

    def shared_times(self, i: int) -> List[float]:
        """Times at which both v_i and v_{i+1} were sampled."""
        earlier = self.solutions[i].v.times
        later = self.solutions[i + 1].v.times
        return [
            float(t) for t in later
            if np.min(np.abs(earlier - t)) <= 1e-9 * max(1.0, abs(float(t)))
        ]

    def describe(self) -> Dict[str, Any]:
        return {**self.partition.describe(), **self.metadata}


def _sample_times(times: np.ndarray, window: Tuple[float, float]) -> List[float]:
    start, stop = window
    slack = 1e-9 * max(1.0, abs(stop))
    return [float(t) for t in times if start + slack < t <= stop + slack]


def solve_intervals(
    mollified: ReynoldsTriple,
    partition: TimePartition,
    config: SolverConfig,
    pool: Optional[WorkerPoolManager] = None,
) -> List[IntervalSolution]:
    """Launch every v_i from v_ℓ(t_i), concurrently, in interval order.

    Raises:
        IntervalSolveError: Naming the first interval whose solve failed
    """
    pool = pool or get_pool_manager()
    v_at = series_sampler(mollified.v)
    times = mollified.times

    def solve(i: int) -> IntervalSolution:
        window = partition.window(i)
        outputs = _sample_times(times, window)
        try:
            result = solve_fns(
                v_at(window[0]), mollified.nu, mollified.gamma, config,
                t0=window[0], output_times=outputs,
            )
        except ConvintError as exc:
            raise IntervalSolveError(i, exc) from exc
        logger.debug(f"interval {i}: solved on [{window[0]:.4g}, {window[1]:.4g}] ({len(outputs)} samples)")
        return IntervalSolution(i, window[0], result.v, result.p, result.metadata)

    return pool.map_ordered(POOL, solve, range(partition.count))


def _weighted(terms: List[PeriodicField]) -> PeriodicField:
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return total


class _GluedSample(NamedTuple):
    v: PeriodicField
    dvdt: PeriodicField
    p: PeriodicField
    R: PeriodicField
    mean_defect: float


def _glued_sample(
    t: float, chi: ChiCutoffs, solutions: List[IntervalSolution], nu: float, gamma: float
) -> _GluedSample:
    active = chi.active(t)
    weights = {i: float(chi.value(i, t)) for i in active}
    rates = {i: float(chi.derivative(i, t)) for i in active}
    vs = {i: solutions[i].velocity(t) for i in active}

    v = _weighted([vs[i] * weights[i] for i in active])
    dvdt = _weighted([vs[i] * rates[i] + fns_rate(vs[i], nu, gamma) * weights[i] for i in active])
    p = _weighted([solutions[i].pressure(t) * weights[i] for i in active])
    grid = v.grid
    stress = PeriodicField.zeros(grid, Rank.SYMTENSOR)
    mean_defect = 0.0
    if len(active) == 2:
        i = active[0]
        c = weights[i]
        d = vs[i] - vs[i + 1]
        mean_defect = float(np.max(np.abs(d.mean())))
        stress = inverse_divergence(d) * rates[i] - traceless_outer(d) * (c * (1.0 - c))
        square = outer(d, d).trace()
        p = p + (square - square.mean()) * (c * (1.0 - c) / 3.0)
    return _GluedSample(v, dvdt, p, stress, mean_defect)


def glue(
    mollified: ReynoldsTriple,
    params: IterationParams,
    level: int,
    config: SolverConfig,
    pool: Optional[WorkerPoolManager] = None,
) -> GluedState:
    """Glue local solutions launched from the mollified triple at scale τ_q.

    Raises:
        IntervalSolveError: If a local solve fails on its window
    """
    lv = level_values(params, level)
    times = mollified.times
    horizon = float(times[-1] - times[0])
    partition = TimePartition(lv.tau_torus, horizon)
    chi = build_chi(partition)
    solutions = solve_intervals(mollified, partition, config, pool)

    samples = [_glued_sample(float(t), chi, solutions, mollified.nu, mollified.gamma) for t in times]
    triple = ReynoldsTriple(
        v=TimeSeries(times, [s.v for s in samples], name="v_glued"),
        p=TimeSeries(times, [s.p for s in samples], name="p_glued"),
        R=TimeSeries(times, [s.R for s in samples], name="R_glued"),
        nu=mollified.nu,
        gamma=mollified.gamma,
        level=level,
        dvdt=TimeSeries(times, [s.dvdt for s in samples], name="dvdt_glued"),
        metadata={"stage": "glue"},
    )
    mean_defect = max(s.mean_defect for s in samples)
    samples_per_tau = lv.tau_torus / float(np.mean(np.diff(times))) if len(times) > 1 else 0.0
    if samples_per_tau < 6.0:
        logger.warning(f"level {level}: only {samples_per_tau:.1f} time samples per gluing interval")
    metadata = {
        "tau": lv.tau_torus,
        "cutoffs": partition.count,
        "max_courant": max(s.metadata.get("max_courant", 0.0) for s in solutions),
        "max_horizon_ratio": max(s.metadata.get("horizon_ratio", 0.0) for s in solutions),
        "difference_mean": mean_defect,
        "samples_per_tau": samples_per_tau,
    }
    logger.info(f"level {level}: glued {partition.count} local solutions (tau={lv.tau_torus:.4g})")
    return GluedState(triple, partition, chi, solutions, mollified, metadata)
