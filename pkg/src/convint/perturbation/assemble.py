#!/usr/bin/env python3
"""Assembly of the next triple (v_{q+1}, p_{q+1}, R̊_{q+1}).

    v_{q+1} = v̄_q + w_{q+1}
    p_{q+1} = p̄_q − Σ_i ρ_{q,i} + ρ_q
    R̊^E     = R(∂_t w + div(v̄⊗w + w⊗v̄ + w⊗w) − ∇Σ_i ρ_{q,i} + div R̊̄_q)
    R̊^D     = ν R((−Δ)^γ w)

R̊̄_q lives where η_i = 1, so div R̊̄_q − ∇Σρ_{q,i} equals −div Σ_i R_{q,i}.
The products are the dealiased ones used by the residual oracle, which makes
the NSR identity of the new triple exact up to the inverse divergence.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from tools.concurrency import WorkerPoolManager, get_pool_manager

from ..errors import ResidualError
from ..gluing.glue import GluedState
from ..ledger import ledger_indices
from ..logger import get_logger
from ..operators.multipliers import fractional_laplacian, inverse_divergence
from ..spectral.field import PeriodicField, Rank
from ..spectral.ops import divergence, gradient, outer, symmetric_outer
from ..state import ReynoldsTriple, TimeSeries, random_test_fields
from ..tolerances import get_tolerances
from .build import POOL, PerturbationBundle
from .pumping import PumpingState

logger = get_logger(__name__)


@dataclass
class AssembledStep:
    """The new triple with R̊^E and R̊^D kept apart."""

    triple: ReynoldsTriple
    euler: TimeSeries
    dissipative: TimeSeries
    metadata: Dict[str, Any] = field(default_factory=dict)


def pumped_pressure(state: PumpingState, index: int) -> PeriodicField:
    """Σ_i ρ_{q,i} at a sample."""
    grid = state.glued.triple.grid
    total = PeriodicField.zeros(grid, Rank.SCALAR)
    for i in range(state.eta.count):
        if state.is_active(i, index):
            total = total + state.rho_i(i, index)
    return total


def euler_forcing(
    glued: GluedState, state: PumpingState, bundle: PerturbationBundle, index: int
) -> PeriodicField:
    """The mean-free vector field whose inverse divergence is R̊^E."""
    vbar = glued.triple.v[index]
    w = bundle.w[index]
    flux = symmetric_outer(vbar, w) + outer(w, w)
    return (
        bundle.w.time_derivative(index)
        + divergence(flux)
        - gradient(pumped_pressure(state, index))
        + divergence(glued.triple.R[index])
    )


def _residual_terms(triple: ReynoldsTriple, index: int) -> Dict[str, float]:
    return {name: term.sup_norm() for name, term in triple.residual_terms(index).items()}


def assemble_next(
    glued: GluedState,
    state: PumpingState,
    bundle: PerturbationBundle,
    level: int,
    pool: Optional[WorkerPoolManager] = None,
    tests: Optional[Sequence[PeriodicField]] = None,
) -> AssembledStep:
    """(v_{q+1}, p_{q+1}, R̊_{q+1}) on the run's time grid.

    Raises:
        ResidualError: If the weak NSR residual of the new triple exceeds the
            tolerance; carries the per-term sup norms at the worst sample
    """
    pool = pool or get_pool_manager()
    base = glued.triple
    times = base.times
    nu, gamma = base.nu, base.gamma

    def stresses(index: int) -> List[PeriodicField]:
        forcing = euler_forcing(glued, state, bundle, index)
        euler = inverse_divergence(forcing)
        dissipative = inverse_divergence(fractional_laplacian(bundle.w[index], gamma)) * nu
        return [euler, dissipative]

    pairs = pool.map_ordered(POOL, stresses, range(len(times)))
    euler = TimeSeries(times, [p[0] for p in pairs], name="R_E")
    dissipative = TimeSeries(times, [p[1] for p in pairs], name="R_D")
    stress = TimeSeries(times, [e + d for e, d in pairs], name="R")
    velocity = TimeSeries(times, [base.v[i] + bundle.w[i] for i in range(len(times))], name="v")
    pressure = TimeSeries(
        times,
        [base.p[i] - pumped_pressure(state, i) + float(state.rho_q[i]) for i in range(len(times))],
        name="p",
    )
    derivative = TimeSeries(
        times,
        [base.time_derivative(i) + bundle.w.time_derivative(i) for i in range(len(times))],
        name="dvdt",
    )
    triple = ReynoldsTriple(
        v=velocity,
        p=pressure,
        R=stress,
        nu=nu,
        gamma=gamma,
        level=level + 1,
        dvdt=derivative,
        metadata={"stage": "assemble", "parent_level": level},
    )

    tests = list(tests) if tests is not None else random_test_fields(triple.grid)
    picks = ledger_indices(len(times))
    residuals = [triple.weak_residual(i, tests) for i in picks]
    worst = int(np.argmax(residuals))
    limit = get_tolerances().for_residual()
    if residuals[worst] > limit:
        index = picks[worst]
        logger.error(f"level {level}: NSR residual of the new triple is {residuals[worst]:.3e}")
        raise ResidualError(
            f"weak residual {residuals[worst]:.3e} above {limit:.1e} at t={times[index]:.6g}",
            _residual_terms(triple, index),
        )

    metadata = {
        "weak_residual": float(residuals[worst]),
        "euler_sup": max(f.sup_norm() for f in euler),
        "dissipative_sup": max(f.sup_norm() for f in dissipative),
        "stress_sup": max(f.sup_norm() for f in stress),
        "glued_stress_sup": max(f.sup_norm() for f in base.R),
    }
    triple.metadata.update(metadata)
    logger.info(
        f"level {level} -> {level + 1}: sup |R| {metadata['glued_stress_sup']:.4e} -> "
        f"{metadata['stress_sup']:.4e} (R_D {metadata['dissipative_sup']:.2e})"
    )
    return AssembledStep(triple, euler, dissipative, metadata)
