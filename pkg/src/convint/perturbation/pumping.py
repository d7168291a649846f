#!/usr/bin/env python3
"""Energy pumping and the conjugated stresses.

    ρ_q(t)     = ⅓ (e(t) − δ_{q+2}/2 − ⨍|v̄_q|²)
    ρ_{q,i}    = η_i² ρ_q / Σ_j ⨍η_j²
    R_{q,i}    = ρ_{q,i} Id − η_i² R̊̄_q
    R̃_{q,i}   = ∇Φ_i R_{q,i} ∇Φ_iᵀ / ρ_{q,i} = ∇Φ_i (Id − (Σ_j⨍η_j²/ρ_q) R̊̄_q) ∇Φ_iᵀ

The last form does not involve η_i, so R̃_{q,i} is defined on the whole
torus; membership in B̄_{1/2}(Id) is required wherever η_i > 0. Energies are
measured in source units; the profile is evaluated at t_torus / 2π.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np

from ..errors import EnergyGapError, StressRangeError
from ..gluing.glue import GluedState
from ..ledger import Ledger
from ..logger import get_logger
from ..mikado.decompose import BALL_RADIUS, ball_distance
from ..schedule.params import TWO_PI, IterationParams, delta, level_values
from ..schedule.profile import EnergyProfile
from ..solver.flow_map import FlowMap
from ..spectral.field import Array, PeriodicField, Rank
from ..tolerances import get_tolerances
from .cutoffs import EtaCutoffs

logger = get_logger(__name__)


@dataclass
class PumpingState:
    """ρ_q, the cutoff energies and the flow maps, with R̃_{q,i} on demand."""

    glued: GluedState
    eta: EtaCutoffs
    flows: List[FlowMap]
    target: np.ndarray
    rho_q: np.ndarray
    eta_energy: np.ndarray
    ledger: Ledger = field(default_factory=Ledger)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.glued.times

    def is_active(self, i: int, index: int) -> bool:
        flow = self.flows[i]
        t = float(self.times[index])
        return bool(flow.times[0] - 1e-12 <= t <= flow.times[-1] + 1e-12)

    def eta_values(self, i: int, index: int) -> Array:
        """η_i at the nodes."""
        return self.eta.field(i, float(self.times[index]), self.glued.triple.grid).values

    def rho_i(self, i: int, index: int) -> PeriodicField:
        """ρ_{q,i} at a sample time."""
        eta = self.eta_values(i, index)
        scale = self.rho_q[index] / self.eta_energy[index]
        return PeriodicField(self.glued.triple.grid, Rank.SCALAR, eta**2 * scale)

    def amplitude(self, i: int, index: int) -> Array:
        """ρ_{q,i}^{1/2} = η_i (ρ_q / Σ⨍η_j²)^{1/2}."""
        return self.eta_values(i, index) * np.sqrt(self.rho_q[index] / self.eta_energy[index])

    def jacobian(self, i: int, index: int) -> Array:
        flow = self.flows[i]
        return flow.jacobian(flow.index_of(float(self.times[index])))

    def rtilde(self, i: int, index: int) -> Array:
        """R̃_{q,i} as a (3, 3, n, n, n) array."""
        grad = self.jacobian(i, index)
        stress = self.glued.triple.R[index].values
        inner = np.eye(3)[:, :, None, None, None] - stress * (self.eta_energy[index] / self.rho_q[index])
        return np.einsum("ab...,bc...,dc...->ad...", grad, inner, grad)

    def rtilde_identity(self, i: int, index: int) -> float:
        """sup |R̃ − Id| where η_i > 0."""
        mask = self.eta_values(i, index) > 0.0
        distance = ball_distance(self.rtilde(i, index))
        return float(np.max(distance[mask])) if np.any(mask) else 0.0

    def describe(self) -> Dict[str, Any]:
        return {
            "rho_min": float(np.min(self.rho_q)),
            "rho_max": float(np.max(self.rho_q)),
            "eta": self.eta.describe(),
            **self.metadata,
        }


def _profile_values(profile: EnergyProfile, times: np.ndarray) -> np.ndarray:
    return np.asarray(profile(times / TWO_PI), dtype=np.float64)


def pump(
    glued: GluedState,
    profile: EnergyProfile,
    params: IterationParams,
    level: int,
    eta: EtaCutoffs,
    flows: List[FlowMap],
) -> PumpingState:
    """Energy pumping for level q and the ball check of every R̃_{q,i}.

    Raises:
        EnergyGapError: If ρ_q(t) ≤ 0 at some sample time
        StressRangeError: If R̃_{q,i} leaves B̄_{1/2}(Id) where η_i > 0
    """
    lv = level_values(params, level)
    d_next = delta(params, level + 1)
    d_next2 = delta(params, level + 2)
    triple = glued.triple
    times = triple.times
    grid = triple.grid
    x1 = grid.coordinates()

    target = _profile_values(profile, times)
    kinetic = triple.v.scalar(lambda f: f.mean_square())
    gap = target - kinetic
    rho_q = (gap - 0.5 * d_next2) / 3.0
    if np.any(rho_q <= 0.0):
        worst = int(np.argmin(rho_q))
        raise EnergyGapError(
            f"e(t) - <|vbar|^2> = {gap[worst]:.4e} at t={times[worst]:.4g} does not exceed "
            f"delta_(q+2)/2 = {0.5 * d_next2:.4e}"
        )
    eta_energy = np.array([eta.energy_sum(float(t), x1) for t in times])

    state = PumpingState(glued, eta, flows, target, rho_q, eta_energy, Ledger(level=level, stage="pump"))
    ledger = state.ledger
    tol = get_tolerances()

    ball = tol.for_ball(BALL_RADIUS)
    worst_distance = 0.0
    deviation = 0.0
    rho_i_sup = 0.0
    normalization = 0.0
    for index, t in enumerate(times):
        total = 0.0
        for i in range(eta.count):
            if not state.is_active(i, index):
                continue
            flow = flows[i]
            deviation = max(deviation, flow.deviation(flow.index_of(float(t))))
            distance = ball_distance(state.rtilde(i, index))
            mask = state.eta_values(i, index) > 0.0
            if np.any(mask):
                masked = np.where(mask, distance, 0.0)
                node = np.unravel_index(int(np.argmax(masked)), masked.shape)
                peak = float(masked[node])
                worst_distance = max(worst_distance, peak)
                if peak > ball:
                    logger.error(f"level {level}: conjugated stress outside the Mikado domain")
                    raise StressRangeError(i, float(t), tuple(int(c) for c in node), peak)
            rho_i = state.rho_i(i, index)
            rho_i_sup = max(rho_i_sup, rho_i.sup_norm())
            total += float(rho_i.mean())
        normalization = max(normalization, abs(total - rho_q[index]) / rho_q[index])

    verified = eta.verify(grid, times)
    c0 = verified["c0"]
    ledger.check_ge("pumping.energy_gap.lower", float(np.min(gap)), d_next / (2.0 * lv.lambda_q**params.alpha),
                    "e - <|vbar_q|^2> >= delta_{q+1} / (2 lambda_q^alpha)")
    ledger.check_le("pumping.energy_gap.upper", float(np.max(gap)), 2.0 * d_next,
                    "e - <|vbar_q|^2> <= 2 delta_{q+1} at every t")
    ledger.check_ge("pumping.rho_lower", float(np.min(rho_q)), d_next / (8.0 * lv.lambda_q**params.alpha),
                    "rho_q >= delta_{q+1} / (8 lambda_q^alpha)")
    ledger.check_le("pumping.rho_upper", float(np.max(rho_q)), d_next, "rho_q <= delta_{q+1}")
    ledger.check_le("pumping.rho_i_bound", rho_i_sup, d_next / c0, "||rho_{q,i}||_0 <= delta_{q+1} / c_0")
    if len(times) > 1:
        # d/dt in source time is 2π d/dt on the torus
        rate = float(np.max(np.abs(np.gradient(rho_q, times)))) * TWO_PI
        ledger.check_lesssim("pumping.rho_rate", rate, d_next * np.sqrt(lv.delta_q) * lv.lambda_q,
                             "||d_t rho_q||_0 <~ delta_{q+1} delta_q^(1/2) lambda_q")
    ledger.check_le("pumping.rho_normalization", normalization, 1e-10,
                    "sum_i <rho_{q,i}> = rho_q (relative)", hard=True)
    ledger.check_ge("pumping.eta_energy", c0, 0.1, "sum_i <eta_i^2> >= c_0")
    ledger.check_le("pumping.eta_energy_upper", float(np.max(eta_energy)), 2.0, "sum_i <eta_i^2> <= 2")
    ledger.check_le("pumping.eta_disjoint", verified["overlap"], 0.0, "eta_i eta_j = 0 for i != j", hard=True)
    ledger.check_le("pumping.eta_one_on_I", verified["one_on_I"], 1e-12, "eta_i = 1 on I_i", hard=True)
    ledger.check_le("pumping.eta_support", verified["outside_support"], 0.0,
                    "supp eta_i inside I_i, J_i, J_{i+1}", hard=True)
    ledger.record("pumping.eta_time_derivative", verified["time_derivative_constant"], "tau_q ||d_t eta_i||_0")
    ledger.check_le("pumping.flow_deviation", deviation, 0.5, "||grad Phi_i - Id||_0 <= 1/2 on supp eta_i")
    ledger.check_le("pumping.stress_ball", worst_distance, ball,
                    "Rtilde_{q,i} in the closed ball of radius 1/2 around Id", hard=True)

    state.metadata.update(
        {
            "c0": c0,
            "max_flow_deviation": deviation,
            "max_ball_distance": worst_distance,
            "rho_normalization": normalization,
        }
    )
    logger.info(
        f"level {level}: rho_q in [{np.min(rho_q):.4e}, {np.max(rho_q):.4e}], "
        f"c0={c0:.3f}, max |Rtilde - Id|={worst_distance:.3f}"
    )
    return state
