#!/usr/bin/env python3
"""The perturbation w_{q+1} built from Mikado flows along the flow maps.

With n = n_{q+1} the integer frequency, g_j = ρ_{q,i}^{1/2} Γ_j(R̃_{q,i}) and
the truncated, renormalized pipe coefficients φ̂_j(k),

    b_{i,k}  = Σ_j g_j φ̂_j(k) k̂_j
    w        = n⁻¹ curl Σ_{i,k} ∇Φ_iᵀ (ik × b_{i,k} / |k|²) e^{in k·Φ_i}
    w_o      = Σ_{i,k} ∇Φ_i⁻¹ b_{i,k} e^{in k·Φ_i}
    w_c      = n⁻¹ Σ_{i,j} ∇g_j × (∇Φ_iᵀ U_{i,j}),  U_{i,j} = Σ_k φ̂_j(k) (ik × k̂_j / |k|²) e^{in k·Φ_i}

w is a curl, hence divergence free with zero mean, and w − (w_o + w_c) equals
(det ∇Φ_i − 1) w_o.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from tools.concurrency import WorkerPoolManager, get_pool_manager

from ..errors import NyquistError
from ..logger import get_logger
from ..mikado.decompose import decompose_field
from ..mikado.fourier import MikadoFourier
from ..schedule.params import IterationParams, delta, frequency
from ..spectral.field import Array, PeriodicField, Rank, forward, inverse
from ..spectral.grid import Grid
from ..spectral.ops import apply_matrix, curl, matrix_field_det, odd_symbols
from ..state import TimeSeries
from .pumping import PumpingState

logger = get_logger(__name__)

POOL = "perturbation"


@dataclass
class PerturbationSample:
    """w, w_o and w_c at one time, with per-time diagnostics."""

    w: PeriodicField
    w_o: PeriodicField
    w_c: PeriodicField
    identity_residual: float
    det_defect: float
    coefficient_constant: Optional[float] = None


@dataclass
class PerturbationBundle:
    """w_{q+1}, w_o and w_c on the run's sample times."""

    w: TimeSeries
    w_o: TimeSeries
    w_c: TimeSeries
    frequency: int
    k_max: int
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.w.times


def _power_table(base: Array, order: int) -> Dict[int, Array]:
    table = {0: np.ones_like(base), 1: base}
    for m in range(2, order + 1):
        table[m] = table[m - 1] * base
    for m in range(1, order + 1):
        table[-m] = np.conj(table[m])
    return table


def _direction_modes(fourier: MikadoFourier, j: int) -> Tuple[np.ndarray, np.ndarray]:
    keep = fourier.profile_modes[j] != 0
    return fourier.wavevectors[keep], fourier.profile_modes[j][keep]


def _gradient_batch(grid: Grid, values: Array) -> Array:
    """∇ of a stack of scalar fields (m, n, n, n) → (m, 3, n, n, n)."""
    ik = np.stack(np.broadcast_arrays(*odd_symbols(grid)))
    return inverse(forward(values)[:, None] * ik[None]).real


def truncation_summary(fourier: MikadoFourier) -> Dict[str, Any]:
    """Moment defects and retained energy of a truncated family; empty for untruncated data."""
    meta = fourier.metadata
    if "cross_direction" not in meta:
        return {}
    return {
        "cross_direction": meta["cross_direction"],
        "energy": meta["energy"],
        "retained_energy": float(min(meta["retained_energy"])),
        "k_max_for_energy": meta.get("k_max_for_energy"),
    }


def nyquist_guard(grid: Grid, n: int, k_max: int, deviation: float) -> float:
    """Largest oscillation frequency n·K·(1 + ‖∇Φ − Id‖₀), checked against the dealiasing cutoff.

    Raises:
        NyquistError: If the frequency is not resolved
    """
    top = n * k_max * (1.0 + deviation)
    if top >= grid.cutoff:
        raise NyquistError(
            f"perturbation frequency {top:.2f} exceeds the grid cutoff {grid.cutoff:.2f}; "
            "use a larger grid, a smaller a or a lower perturbation k_max"
        )
    return top


def perturbation_sample(
    state: PumpingState,
    fourier: MikadoFourier,
    n: int,
    index: int,
    coefficient_check: bool = False,
) -> PerturbationSample:
    """w, w_o and w_c at sample ``index``."""
    grid = state.glued.triple.grid
    units = fourier.family.units
    potential = np.zeros((3,) + grid.shape)
    w_o = np.zeros((3,) + grid.shape)
    w_c = np.zeros((3,) + grid.shape)
    det_defect = 0.0
    coefficient_constant = 0.0 if coefficient_check else None
    eye = np.eye(3)[:, :, None, None, None]

    for i in range(state.eta.count):
        if not state.is_active(i, index):
            continue
        amplitude = state.amplitude(i, index)
        mask = amplitude > 0.0
        if not np.any(mask):
            continue
        rtilde = np.where(mask[None, None], state.rtilde(i, index), eye)
        g = amplitude[None] * np.sqrt(decompose_field(rtilde))
        grad_g = _gradient_batch(grid, g)
        flow = state.flows[i]
        k = flow.index_of(float(state.times[index]))
        jac = flow.jacobian(k)
        jac_t = np.swapaxes(jac, 0, 1)
        positions = flow.positions(k)
        tables = [_power_table(np.exp(1j * n * positions[a]), fourier.k_max) for a in range(3)]

        principal = np.zeros((3,) + grid.shape)
        stream = np.zeros((3,) + grid.shape)
        for j in range(fourier.family.count):
            modes, coefficients = _direction_modes(fourier, j)
            if not len(modes):
                continue
            scalar = np.zeros(grid.shape, dtype=np.complex128)
            vector = np.zeros((3,) + grid.shape, dtype=np.complex128)
            for kv, c in zip(modes, coefficients):
                phase = tables[0][int(kv[0])] * tables[1][int(kv[1])] * tables[2][int(kv[2])]
                pot = 1j * np.cross(kv.astype(np.float64), units[j]) / float(kv @ kv)
                scalar += c * phase
                vector += (c * pot)[:, None, None, None] * phase[None]
            u_j = vector.real
            principal += g[j][None] * units[j][:, None, None, None] * scalar.real[None]
            stream += g[j][None] * u_j
            w_c += np.cross(grad_g[j], apply_matrix(jac_t, u_j), axis=0) / n
        piece = apply_matrix(flow.inverse_jacobian(k), principal)
        w_o += piece
        potential += apply_matrix(jac_t, stream)
        det_defect = max(det_defect, float(np.max(np.abs((matrix_field_det(jac) - 1.0) * np.linalg.norm(piece, axis=0)))))

        if coefficient_check:
            assert coefficient_constant is not None
            for kv in fourier.wavevectors:
                column = np.all(fourier.wavevectors == kv, axis=1)
                c = fourier.profile_modes[:, column][:, 0]
                b = np.einsum("j...,j,ja->a...", g, c, units)
                size = float(np.max(np.sqrt(np.sum(np.abs(b) ** 2, axis=0))))
                coefficient_constant = max(coefficient_constant, size * float(kv @ kv) ** 2)

    w = curl(PeriodicField(grid, Rank.VECTOR, potential)) * (1.0 / n)
    wo_field = PeriodicField(grid, Rank.VECTOR, w_o)
    wc_field = PeriodicField(grid, Rank.VECTOR, w_c)
    residual = float(np.max(np.linalg.norm(w.values - w_o - w_c, axis=0)))
    return PerturbationSample(w, wo_field, wc_field, residual, det_defect, coefficient_constant)


def build_perturbation(
    state: PumpingState,
    fourier: MikadoFourier,
    params: IterationParams,
    level: int,
    pool: Optional[WorkerPoolManager] = None,
    checked: Optional[List[int]] = None,
) -> PerturbationBundle:
    """w_{q+1} at every sample time, evaluated concurrently in time order.

    ``fourier`` is the truncated family data; ``checked`` lists the sample
    indices at which the coefficient bound ‖b_{i,k}‖₀|k|⁴ is measured.

    Raises:
        NyquistError: If n_{q+1}·k_max is not resolved by the grid
    """
    pool = pool or get_pool_manager()
    grid = state.glued.triple.grid
    n = frequency(params, level + 1)
    deviation = max((f.metadata.get("max_deviation", 0.0) for f in state.flows), default=0.0)
    top = nyquist_guard(grid, n, fourier.k_max, deviation)
    times = state.times
    checked_set = set(checked or [])

    samples: List[PerturbationSample] = pool.map_ordered(
        POOL,
        lambda index: perturbation_sample(state, fourier, n, index, index in checked_set),
        range(len(times)),
    )
    constants = [s.coefficient_constant for s in samples if s.coefficient_constant is not None]
    d_next = delta(params, level + 1)
    bundle = PerturbationBundle(
        w=TimeSeries(times, [s.w for s in samples], name="w"),
        w_o=TimeSeries(times, [s.w_o for s in samples], name="w_o"),
        w_c=TimeSeries(times, [s.w_c for s in samples], name="w_c"),
        frequency=n,
        k_max=fourier.k_max,
        metadata={
            "top_frequency": top,
            "identity_residual": max(s.identity_residual for s in samples),
            "det_defect": max(s.det_defect for s in samples),
            "coefficient_constant": max(constants) / np.sqrt(d_next) if constants else None,
            "truncation": truncation_summary(fourier),
        },
    )
    logger.info(
        f"level {level}: perturbation at frequency {n} with {len(fourier.wavevectors)} modes, "
        f"sup |w| = {max(s.w.sup_norm() for s in samples):.4e}"
    )
    return bundle
