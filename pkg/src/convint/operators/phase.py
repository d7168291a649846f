#!/usr/bin/env python3
"""Stationary-phase decay probe for oscillatory integrals a·e^{ik·Φ}."""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..errors import NyquistError, ParameterError
from ..logger import get_logger
from ..spectral.field import Array, PeriodicField, Rank
from ..spectral.fitting import PowerLawFit, fit_power_law
from ..spectral.holder import ledger_seminorm
from ..spectral.ops import gradient, matrix_field_det
from .multipliers import inverse_divergence

logger = get_logger(__name__)

DEFAULT_FLOOR = 1e-13


@dataclass(frozen=True)
class PhaseSample:
    k: tuple[int, int, int]
    k_norm: float
    integral: complex
    inverse_divergence_norm: float


@dataclass(frozen=True)
class PhaseDecayTable:
    samples: List[PhaseSample]
    alpha: float
    gradient_bound: float

    def integral_decay(self, floor: float = DEFAULT_FLOOR) -> PowerLawFit:
        """Fit |∫ a e^{ik·Φ}| against |k|; the slope is minus the decay exponent."""
        return fit_power_law(
            [s.k_norm for s in self.samples], [abs(s.integral) for s in self.samples], floor
        )

    def inverse_divergence_decay(self) -> PowerLawFit:
        return fit_power_law(
            [s.k_norm for s in self.samples],
            [s.inverse_divergence_norm for s in self.samples],
        )


def _phase_gradient(phi_minus_id: PeriodicField) -> Array:
    jac = gradient(phi_minus_id).values + np.eye(3)[:, :, None, None, None]
    det = matrix_field_det(jac)
    if float(np.min(det)) <= 0.0:
        raise ParameterError(f"phase map is not invertible (min det ∇Φ = {float(np.min(det)):.3e})")
    return jac


def stationary_phase_probe(
    a: PeriodicField,
    phi_minus_id: PeriodicField,
    k_list: Sequence[Sequence[int]],
    alpha: float = 0.5,
    with_inverse_divergence: bool = True,
) -> PhaseDecayTable:
    """Quadrature of ⨍ a e^{ik·Φ} and ‖R(a e^{ik·Φ})‖_α over k_list.

    Φ is passed as the periodic displacement Φ − id.

    Raises:
        NyquistError: If |k|·max|∇Φ| is beyond the grid Nyquist frequency
        ParameterError: If ∇Φ degenerates somewhere on the grid
    """
    if a.rank is not Rank.SCALAR or phi_minus_id.rank is not Rank.VECTOR:
        raise ParameterError("probe needs a scalar amplitude and a vector phase displacement")
    grid = a.grid
    jac = _phase_gradient(phi_minus_id)
    moved = np.moveaxis(jac, (0, 1), (-2, -1))
    grad_bound = float(np.max(np.linalg.norm(moved, ord=2, axis=(-2, -1))))
    x = grid.full_mesh()
    phase_points = x + phi_minus_id.values

    samples = []
    for k in k_list:
        kv = np.asarray(k, dtype=np.float64)
        k_norm = float(np.linalg.norm(kv))
        if k_norm * grad_bound > grid.n / 2:
            raise NyquistError(
                f"oscillation |k|·max|∇Φ| = {k_norm * grad_bound:.2f} exceeds Nyquist {grid.n // 2}"
            )
        wave = np.exp(1j * np.einsum("i,i...->...", kv, phase_points))
        integrand = a.values * wave
        integral = complex(np.mean(integrand))
        r_norm = 0.0
        if with_inverse_divergence:
            centered = integrand - integral
            zeros = np.zeros_like(centered)
            vector = PeriodicField(grid, Rank.VECTOR, np.stack([centered, zeros, zeros]))
            r_norm = ledger_seminorm(inverse_divergence(vector), alpha)
        samples.append(
            PhaseSample(tuple(int(c) for c in k), k_norm, integral, r_norm)  # type: ignore[arg-type]
        )
        logger.debug(f"phase probe k={tuple(k)} |integral|={abs(integral):.3e} R-norm={r_norm:.3e}")
    return PhaseDecayTable(samples, alpha, grad_bound)
