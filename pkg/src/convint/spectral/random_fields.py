#!/usr/bin/env python3
"""Seeded random band-limited fields for oracles and property checks."""

import numpy as np

from .field import PeriodicField, Rank, forward
from .grid import Grid
from .ops import curl_modes


def random_band_limited(
    grid: Grid,
    rank: Rank,
    rng: np.random.Generator,
    k_max: int = 4,
    decay: float = 2.0,
    mean_free: bool = True,
) -> PeriodicField:
    """Real field with modes |k|_∞ <= k_max and amplitudes ~ (1+|k|)^-decay."""
    shape = rank.component_shape + grid.shape
    k1, k2, k3 = grid.k_vectors()
    inside = (np.abs(k1) <= k_max) & (np.abs(k2) <= k_max) & (np.abs(k3) <= k_max)
    weight = np.where(inside, (1.0 + np.sqrt(grid.k_squared())) ** -decay, 0.0)
    noise = rng.standard_normal(shape)
    modes = forward(noise) * weight
    if mean_free:
        modes[(...,) + (0, 0, 0)] = 0.0
    modes = np.where(grid.nyquist_mask(), 0.0, modes)
    field = PeriodicField.from_modes(grid, Rank.TENSOR if rank is Rank.SYMTENSOR else rank, modes)
    if rank is Rank.SYMTENSOR:
        field = PeriodicField(
            grid, Rank.SYMTENSOR, 0.5 * (field.values + np.swapaxes(field.values, 0, 1))
        )
    scale = max(field.sup_norm(), 1e-300)
    return field / scale


def random_divergence_free(
    grid: Grid, rng: np.random.Generator, k_max: int = 4, decay: float = 2.0
) -> PeriodicField:
    """curl of a random band-limited potential, normalized to unit sup norm."""
    potential = random_band_limited(grid, Rank.VECTOR, rng, k_max, decay)
    field = PeriodicField.from_modes(grid, Rank.VECTOR, curl_modes(grid, potential.modes))
    return field / max(field.sup_norm(), 1e-300)
