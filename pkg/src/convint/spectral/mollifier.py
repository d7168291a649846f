#!/usr/bin/env python3
"""Compactly supported radial mollifier and the quadratic commutator probe.

The kernel is the bump exp(-1/(1-r²)) on r = |x|/ℓ < 1, sampled on the grid
(torus-wrapped distance) and normalized to unit discrete mass. Convolution is
the discrete circular quadrature, evaluated through the FFT.
"""

import math
from functools import lru_cache
from typing import List, NamedTuple, Sequence

import numpy as np

from ..errors import ParameterError, SamplingError
from ..logger import get_logger
from .field import Array, PeriodicField, forward
from .grid import FloatArray, Grid

logger = get_logger(__name__)

UNDER_RESOLVED_SPACINGS = 2.0


def bump(r: Array) -> Array:
    """exp(-1/(1-r²)) for |r| < 1, zero elsewhere."""
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def _transition_pair(s: Array) -> tuple:
    s = np.clip(np.asarray(s, dtype=np.float64), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f0 = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        f1 = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return s, f0, f1


def smooth_step(s: Array) -> Array:
    """C^∞ step from 0 (s ≤ 0) to 1 (s ≥ 1): f(s)/(f(s) + f(1−s)), f = e^{−1/s}."""
    _, f0, f1 = _transition_pair(s)
    return f0 / (f0 + f1)


def smooth_step_derivative(s: Array) -> Array:
    """d/ds of ``smooth_step``; zero outside (0, 1)."""
    s, f0, f1 = _transition_pair(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        d0 = np.where(s > 0, f0 / np.where(s > 0, s, 1.0) ** 2, 0.0)
        d1 = np.where(s < 1, f1 / np.where(s < 1, 1.0 - s, 1.0) ** 2, 0.0)
    return (d0 * f1 + f0 * d1) / (f0 + f1) ** 2


def _wrapped_coordinates(grid: Grid) -> FloatArray:
    x = grid.coordinates()
    return np.where(x >= math.pi, x - 2.0 * math.pi, x)


@lru_cache(maxsize=64)
def kernel_values(grid: Grid, ell: float) -> FloatArray:
    """Discrete kernel ψ_ℓ with unit mass, centered at the origin node."""
    w = _wrapped_coordinates(grid)
    r = np.sqrt(w[:, None, None] ** 2 + w[None, :, None] ** 2 + w[None, None, :] ** 2) / ell
    values = bump(r)
    values /= values.sum()
    values.setflags(write=False)
    return values


@lru_cache(maxsize=64)
def mollifier_multiplier(grid: Grid, ell: float) -> FloatArray:
    """Fourier multiplier of convolution with ψ_ℓ (real, since ψ_ℓ is even)."""
    multiplier = np.ascontiguousarray((forward(kernel_values(grid, ell)) * grid.size).real)
    multiplier.setflags(write=False)
    return multiplier


def is_under_resolved(grid: Grid, ell: float) -> bool:
    return ell < UNDER_RESOLVED_SPACINGS * grid.spacing


def mollify(field: PeriodicField, ell: float) -> PeriodicField:
    """Convolve every component with ψ_ℓ.

    Raises:
        ParameterError: If ell is not positive or exceeds half the period
    """
    if not ell > 0.0:
        raise ParameterError(f"mollification scale must be positive, got {ell}")
    if ell > math.pi:
        raise ParameterError(f"mollification scale {ell} exceeds half the period")
    under = is_under_resolved(field.grid, ell)
    if under:
        logger.debug(
            f"mollifier ell={ell:.4g} below {UNDER_RESOLVED_SPACINGS} grid spacings "
            f"({field.grid.spacing:.4g})"
        )
    modes = field.modes * mollifier_multiplier(field.grid, float(ell))
    result = PeriodicField.from_modes(field.grid, field.rank, modes, real=field.reality_flag)
    return result.with_metadata(mollifier_ell=float(ell), under_resolved=under)


class CommutatorPoint(NamedTuple):
    ell: float
    norm: float
    under_resolved: bool


def commutator_probe(
    f: PeriodicField, g: PeriodicField, ell_list: Sequence[float]
) -> List[CommutatorPoint]:
    """‖(f∗ψ_ℓ)(g∗ψ_ℓ) − (fg)∗ψ_ℓ‖₀ for each ℓ.

    Vector inputs are multiplied componentwise.
    """
    product = f.with_values(f.values * g.values)
    points = []
    for ell in ell_list:
        lhs = mollify(f, ell).values * mollify(g, ell).values
        rhs = mollify(product, ell).values
        diff = f.with_values(lhs - rhs)
        points.append(CommutatorPoint(float(ell), diff.sup_norm(), is_under_resolved(f.grid, ell)))
    return points


def time_kernel_weights(dt: float, scale: float) -> FloatArray:
    """Unit-mass 1-D bump weights at spacing dt for a time scale."""
    if dt > scale / 4.0:
        raise SamplingError(
            f"time step {dt:.4g} too coarse to mollify at scale {scale:.4g} (need dt <= scale/4)"
        )
    half = int(math.floor(scale / dt))
    offsets = np.arange(-half, half + 1) * dt
    weights = bump(offsets / scale)
    return weights / weights.sum()


def mollify_time(samples: Array, dt: float, scale: float) -> Array:
    """Convolve a stack of samples (time on axis 0) with the 1-D bump.

    The series is padded by repeating its first and last samples.
    """
    weights = time_kernel_weights(dt, scale)
    half = len(weights) // 2
    count = samples.shape[0]
    out = np.zeros_like(samples, dtype=np.result_type(samples, np.float64))
    for j in range(count):
        for m, w in enumerate(weights):
            if w == 0.0:
                continue
            src = min(max(j + m - half, 0), count - 1)
            out[j] += w * samples[src]
    return out
