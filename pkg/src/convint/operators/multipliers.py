#!/usr/bin/env python3
"""Nonlocal operators as Fourier multipliers.

Every inversion of the Laplacian maps the k = 0 mode to 0. Operators whose
symbol is odd in k drop the Nyquist modes.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from ..errors import FieldShapeError, NonzeroMeanError, ParameterError
from ..logger import get_logger
from ..spectral.field import Array, PeriodicField, Rank
from ..spectral.grid import FloatArray, Grid
from ..spectral.ops import outer
from ..tolerances import get_tolerances

logger = get_logger(__name__)

Symbol = Callable[[Array, Array, Array], Array]


def _safe_k2(k1: Array, k2: Array, k3: Array) -> tuple[Array, Array]:
    k_sq = k1**2 + k2**2 + k3**2
    zero = k_sq == 0
    return np.where(zero, 1.0, k_sq), zero


@dataclass(frozen=True)
class FourierMultiplierOp:
    """An operator acting diagonally in k.

    ``symbol(k1, k2, k3)`` evaluates the (tensor) symbol at arbitrary
    wavevectors with output components first; ``action`` applies it to a mode
    array on a grid.
    """

    name: str
    input_rank: Optional[Rank]
    output_rank: Optional[Rank]
    zero_mode: str
    odd: bool
    symbol: Symbol
    action: Callable[[Grid, Array], Array]

    def __call__(self, field: PeriodicField) -> PeriodicField:
        if self.input_rank is not None and field.rank is not self.input_rank:
            raise FieldShapeError(
                f"{self.name} expects a {self.input_rank.value} field, got {field.rank.value}"
            )
        modes = self.action(field.grid, field.modes)
        if self.odd:
            modes = np.where(field.grid.nyquist_mask(), 0.0, modes)
        rank = self.output_rank or field.rank
        return PeriodicField.from_modes(field.grid, rank, modes, real=field.reality_flag)


# fractional Laplacian ------------------------------------------------------


@lru_cache(maxsize=32)
def fractional_symbol(grid: Grid, gamma: float) -> FloatArray:
    """|k|^{2γ} on the grid with the zero mode mapped to 0."""
    symbol = grid.k_squared() ** gamma
    symbol[0, 0, 0] = 0.0
    symbol.setflags(write=False)
    return symbol


def fractional_laplacian_op(gamma: float) -> FourierMultiplierOp:
    def symbol(k1: Array, k2: Array, k3: Array) -> Array:
        k_sq = k1**2 + k2**2 + k3**2
        return np.where(k_sq == 0, 0.0, np.abs(k_sq) ** gamma)

    return FourierMultiplierOp(
        name=f"fractional_laplacian[{gamma}]",
        input_rank=None,
        output_rank=None,
        zero_mode="0",
        odd=False,
        symbol=symbol,
        action=lambda grid, modes: modes * fractional_symbol(grid, gamma),
    )


def fractional_laplacian(field: PeriodicField, gamma: float) -> PeriodicField:
    """(−Δ)^γ: mode k scaled by |k|^{2γ}.

    Raises:
        ParameterError: If gamma is outside (0, 1]
    """
    if not 0.0 < gamma <= 1.0:
        raise ParameterError(f"fractional order must lie in (0, 1], got {gamma}")
    return fractional_laplacian_op(float(gamma))(field)


def fractional_energy(field: PeriodicField, gamma: float) -> float:
    """⨍ |(−Δ)^{γ/2} f|² via Parseval."""
    weight = fractional_symbol(field.grid, float(gamma))
    power = np.abs(field.modes) ** 2
    return float(np.sum(power * weight))


# Leray projection and pressure ---------------------------------------------


def _leray_action(grid: Grid, modes: Array) -> Array:
    k1, k2, k3 = grid.k_vectors()
    k_dot = k1 * modes[0] + k2 * modes[1] + k3 * modes[2]
    factor = k_dot / grid.k_squared_safe()
    return np.stack([modes[0] - k1 * factor, modes[1] - k2 * factor, modes[2] - k3 * factor])


def _leray_symbol(k1: Array, k2: Array, k3: Array) -> Array:
    k_sq, zero = _safe_k2(k1, k2, k3)
    k = np.stack(np.broadcast_arrays(k1, k2, k3))
    eye = np.eye(3).reshape((3, 3) + (1,) * (k.ndim - 1))
    return np.where(zero, eye, eye - k[:, None] * k[None, :] / k_sq)


LERAY = FourierMultiplierOp(
    name="leray_projection",
    input_rank=Rank.VECTOR,
    output_rank=Rank.VECTOR,
    zero_mode="identity",
    odd=False,
    symbol=_leray_symbol,
    action=_leray_action,
)


def leray_project(v: PeriodicField) -> PeriodicField:
    """v − ∇Δ⁻¹ div v."""
    return LERAY(v)


def pressure_from_stress(flux: PeriodicField) -> PeriodicField:
    """Zero-mean p with Δp = div div F, i.e. p̂ = k_i k_j F̂_ij / |k|²."""
    grid = flux.grid
    k = grid.k_vectors()
    m = flux.modes
    acc = np.zeros(grid.shape, dtype=np.complex128)
    for i in range(3):
        for j in range(3):
            acc += k[i] * k[j] * m[i, j]
    acc /= grid.k_squared_safe()
    acc[0, 0, 0] = 0.0
    return PeriodicField.from_modes(grid, Rank.SCALAR, acc)


def pressure_from_velocity(
    v: PeriodicField, stress: Optional[PeriodicField] = None
) -> PeriodicField:
    """Pressure solving Δp = div div(−v⊗v + R̊) with ⨍ p = 0."""
    flux = -outer(v, v)
    if stress is not None:
        flux = flux + stress
    return pressure_from_stress(flux)


# Biot–Savart ----------------------------------------------------------------


def _biot_action(grid: Grid, modes: Array) -> Array:
    k1, k2, k3 = grid.k_vectors()
    k_sq = grid.k_squared_safe()
    out = np.stack(
        [
            1j * (k2 * modes[2] - k3 * modes[1]),
            1j * (k3 * modes[0] - k1 * modes[2]),
            1j * (k1 * modes[1] - k2 * modes[0]),
        ]
    ) / k_sq
    out[(slice(None), 0, 0, 0)] = 0.0
    return out


def _biot_symbol(k1: Array, k2: Array, k3: Array) -> Array:
    k_sq, zero = _safe_k2(k1, k2, k3)
    k1, k2, k3 = np.broadcast_arrays(k1, k2, k3)
    z = np.zeros_like(k1, dtype=np.complex128)
    cross = np.array([[z, -1j * k3, 1j * k2], [1j * k3, z, -1j * k1], [-1j * k2, 1j * k1, z]])
    return np.where(zero, 0.0, cross / k_sq)


BIOT_SAVART = FourierMultiplierOp(
    name="biot_savart",
    input_rank=Rank.VECTOR,
    output_rank=Rank.VECTOR,
    zero_mode="0",
    odd=True,
    symbol=_biot_symbol,
    action=_biot_action,
)


def biot_savart(v: PeriodicField) -> PeriodicField:
    """z = (−Δ)⁻¹ curl v; div z = 0 and curl z = v − ⨍v for divergence-free v."""
    return BIOT_SAVART(v)


# inverse divergence ----------------------------------------------------------


def _inverse_divergence_modes(
    k1: Array, k2: Array, k3: Array, f1: Array, f2: Array, f3: Array
) -> Array:
    """R̂_ij = (i/2) k_i k_j s/|k|² + (i/2) δ_ij s − i k_i û_j − i k_j û_i.

    û = f̂/|k|², s = k·û.
    """
    k_sq, zero = _safe_k2(k1, k2, k3)
    k = (k1, k2, k3)
    u = (f1 / k_sq, f2 / k_sq, f3 / k_sq)
    s = k1 * u[0] + k2 * u[1] + k3 * u[2]
    shape = np.broadcast(k1, k2, k3, f1).shape
    out = np.zeros((3, 3) + shape, dtype=np.complex128)
    for i in range(3):
        for j in range(i, 3):
            entry = 0.5j * k[i] * k[j] * s / k_sq - 1j * (k[i] * u[j] + k[j] * u[i])
            if i == j:
                entry = entry + 0.5j * s
            entry = np.where(zero, 0.0, entry)
            out[i, j] = entry
            out[j, i] = entry
    return out


def _inverse_divergence_symbol(k1: Array, k2: Array, k3: Array) -> Array:
    """Symbol as a (3, 3, 3) tensor: column c is R applied to f̂ = e_c."""
    shape = np.broadcast(k1, k2, k3).shape
    one, zero = np.ones(shape), np.zeros(shape)
    columns = [
        _inverse_divergence_modes(k1, k2, k3, *(one if a == c else zero for a in range(3)))
        for c in range(3)
    ]
    return np.stack(columns, axis=2)


def _inverse_divergence_action(grid: Grid, modes: Array) -> Array:
    k1, k2, k3 = grid.k_vectors()
    return _inverse_divergence_modes(k1, k2, k3, modes[0], modes[1], modes[2])


INVERSE_DIVERGENCE = FourierMultiplierOp(
    name="inverse_divergence",
    input_rank=Rank.VECTOR,
    output_rank=Rank.SYMTENSOR,
    zero_mode="0",
    odd=True,
    symbol=_inverse_divergence_symbol,
    action=_inverse_divergence_action,
)


def inverse_divergence(f: PeriodicField) -> PeriodicField:
    """Symmetric R f with div R f = f for mean-free f.

    A mean below the configured threshold (relative to sup |f|) is removed and
    recorded in the result metadata as ``removed_mean``.

    Raises:
        NonzeroMeanError: If the mean is not negligible
    """
    mean = f.mean()
    scale = max(f.sup_norm(), 1.0)
    if float(np.max(np.abs(mean))) > get_tolerances().mean_error * scale:
        raise NonzeroMeanError(f"inverse divergence needs a mean-free field, mean={mean}")
    result = INVERSE_DIVERGENCE(f)
    values = 0.5 * (result.values + np.swapaxes(result.values, 0, 1))
    trace_norm = float(np.max(np.abs(np.trace(values, axis1=0, axis2=1))))
    return PeriodicField(
        f.grid,
        Rank.SYMTENSOR,
        values,
        {"removed_mean": mean.tolist(), "trace_norm": trace_norm},
    )


# Calderón–Zygmund ------------------------------------------------------------


def calderon_zygmund(field: PeriodicField, i: int, j: int) -> PeriodicField:
    """∂_i ∂_j Δ⁻¹ f, symbol k_i k_j / |k|²."""
    k = field.grid.k_vectors()
    symbol = k[i] * k[j] / field.grid.k_squared_safe()
    modes = field.modes * symbol
    modes[(...,) + (0, 0, 0)] = 0.0
    return PeriodicField.from_modes(field.grid, field.rank, modes, real=field.reality_flag)
