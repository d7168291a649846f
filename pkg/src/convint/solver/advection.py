#!/usr/bin/env python3
"""Nonlocal advection–diffusion u_t + (v·∇)u + ν(−Δ)^γ u = f with a given velocity."""

from typing import Callable, List, Optional, Union

import numpy as np

from ..errors import CFLViolation, ParameterError
from ..logger import get_logger
from ..operators.multipliers import fractional_symbol
from ..spectral.field import Array, PeriodicField, Rank, forward, inverse
from ..spectral.ops import odd_symbols
from ..state import TimeSeries
from .fns import SolveResult, SolverConfig, integrating_factor_rk4

logger = get_logger(__name__)

Sampler = Callable[[float], PeriodicField]
Source = Union[PeriodicField, TimeSeries, Sampler]


def lagrange_weights(nodes: np.ndarray, s: float) -> np.ndarray:
    """Weights of the interpolating polynomial through ``nodes`` evaluated at s."""
    weights = np.ones(len(nodes))
    for j, xj in enumerate(nodes):
        for m, xm in enumerate(nodes):
            if m != j:
                weights[j] *= (s - xm) / (xj - xm)
    return weights


def series_sampler(series: TimeSeries, points: int = 4) -> Sampler:
    """Local cubic interpolation in time through the nearest samples.

    Raises:
        ParameterError: On evaluation outside the sampled window
    """
    times = series.times
    count = len(series)
    slack = 1e-9 * max(1.0, float(abs(times[-1])))

    def sample(t: float) -> PeriodicField:
        if t < times[0] - slack or t > times[-1] + slack:
            raise ParameterError(
                f"t={t:.6g} outside the sampled window [{times[0]:.6g}, {times[-1]:.6g}]"
            )
        hit = np.nonzero(np.abs(times - t) <= slack)[0]
        if hit.size:
            return series[int(hit[0])]
        width = min(points, count)
        right = int(np.searchsorted(times, t))
        start = min(max(right - width // 2, 0), count - width)
        idx = list(range(start, start + width))
        weights = lagrange_weights(times[idx], t)
        values = sum(w * series[i].values for w, i in zip(weights, idx))
        return series[idx[0]].with_values(np.asarray(values))

    return sample


def as_sampler(source: Optional[Source]) -> Optional[Sampler]:
    if source is None:
        return None
    if isinstance(source, PeriodicField):
        return lambda _: source
    if isinstance(source, TimeSeries):
        return series_sampler(source)
    return source


def velocity_sampler(velocity: Optional[Source]) -> Sampler:
    """Sampler of a velocity that must be present.

    Raises:
        ParameterError: If no velocity is given
    """
    sampler = as_sampler(velocity)
    if sampler is None:
        raise ParameterError("a velocity field, series or callable is required")
    return sampler


def transport_term(velocity: Array, modes: Array, ik: tuple) -> Array:
    """Mode-space (v·∇)u for scalar or vector u (not dealiased)."""
    if modes.ndim == 3:
        grads = sum(velocity[j] * inverse(modes * ik[j]).real for j in range(3))
    else:
        grads = sum(velocity[j][None] * inverse(modes * ik[j]).real for j in range(3))
    return forward(np.asarray(grads))


def solve_advection_diffusion(
    u0: PeriodicField,
    velocity: Source,
    nu: float,
    gamma: float,
    config: SolverConfig,
    forcing: Optional[Source] = None,
    t0: float = 0.0,
    horizon: Optional[float] = None,
) -> SolveResult:
    """Integrate the linear transport–diffusion problem with the IF-RK4 scheme.

    ``velocity`` and ``forcing`` are steady fields, time series or callables
    of time. The pressure slot of the result is left empty (zeros).

    Raises:
        CFLViolation: If dt·max|v|/h exceeds config.cfl
    """
    if u0.rank not in (Rank.SCALAR, Rank.VECTOR):
        raise ParameterError("advected quantity must be a scalar or vector field")
    grid = u0.grid
    v_at = velocity_sampler(velocity)
    f_at = as_sampler(forcing)
    span = config.horizon if horizon is None else horizon
    steps, h = config.steps(span)
    ik = odd_symbols(grid)
    mask = grid.dealias_mask() if config.dealias else np.ones(grid.shape, dtype=bool)
    decay = nu * fractional_symbol(grid, gamma) if nu > 0 else np.zeros(grid.shape)

    def rhs(t: float, modes: Array) -> Array:
        out = -transport_term(v_at(t).values, modes, ik) * mask
        if f_at is not None:
            out = out + f_at(t).modes
        return out

    modes = u0.modes.copy()
    real = u0.reality_flag
    times: List[float] = [t0]
    fields: List[PeriodicField] = [u0]
    t = t0
    for step in range(1, steps + 1):
        speed = v_at(t).sup_norm()
        courant = h * speed / grid.spacing
        if courant > config.cfl:
            raise CFLViolation(f"Courant number {courant:.3f} > {config.cfl} at t={t:.4g}")
        modes = integrating_factor_rk4(modes, decay, rhs, t, h)
        t = t0 + step * h
        if step % config.save_every == 0 or step == steps:
            times.append(t)
            fields.append(PeriodicField.from_modes(grid, u0.rank, modes, real=real))
    series = TimeSeries(times, fields, name="u")
    zero = PeriodicField.zeros(grid, Rank.SCALAR)
    return SolveResult(
        series,
        TimeSeries.lazy(times, lambda i: zero, "p"),
        {"steps": steps, "dt": h, "t0": t0, "horizon": span},
    )
