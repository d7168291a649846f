#!/usr/bin/env python3
"""Fractional Navier–Stokes integrator on [0, 2π)³.

∂_t v + P div(v⊗v) + ν(−Δ)^γ v = 0, advanced in mode space with RK4 on the
projected, dealiased nonlinearity and an exact integrating factor
e^{−ν|k|^{2γ}t} for the dissipation.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import BlowUpError, CFLViolation, HorizonError, ParameterError
from ..logger import get_logger
from ..operators.multipliers import fractional_symbol, leray_project, pressure_from_velocity
from ..spectral.field import Array, PeriodicField, Rank, forward, inverse
from ..spectral.grid import Grid
from ..spectral.holder import ledger_norm, ledger_seminorm
from ..spectral.ops import divergence, odd_symbols, strip_nyquist
from ..state import ReynoldsTriple, TimeSeries
from ..tolerances import get_tolerances

logger = get_logger(__name__)

SCHEMES = ("rk4_integrating_factor",)

NonlinearTerm = Callable[[float, Array], Array]


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping settings shared by every local solve."""

    dt: float = 0.02
    horizon: float = 1.0
    scheme: str = "rk4_integrating_factor"
    dealias: bool = True
    cfl: float = 0.5
    blowup_factor: float = 10.0
    horizon_constant: float = 0.1
    enforce_horizon: bool = False
    alpha: float = 0.01
    save_every: int = 1

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if not self.horizon > 0.0:
            raise ParameterError(f"horizon must be positive, got {self.horizon}")
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme '{self.scheme}' (known: {SCHEMES})")
        if self.save_every < 1:
            raise ParameterError("save_every must be at least 1")

    def steps(self, horizon: Optional[float] = None) -> tuple[int, float]:
        """Number of steps and the step that lands exactly on the horizon."""
        span = self.horizon if horizon is None else horizon
        count = max(1, int(math.ceil(span / self.dt - 1e-9)))
        return count, span / count

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "SolverConfig":
        known = {k: values[k] for k in cls.__dataclass_fields__ if k in values}
        return cls(**known)


@dataclass
class SolveResult:
    """Velocity samples and the matching (lazy) pressure."""

    v: TimeSeries
    p: TimeSeries
    metadata: Dict[str, Any] = field(default_factory=dict)

    def as_triple(self, nu: float, gamma: float, level: int = 0) -> ReynoldsTriple:
        grid = self.v.grid
        zero = PeriodicField.zeros(grid, Rank.SYMTENSOR)
        return ReynoldsTriple(
            v=self.v,
            p=self.p,
            R=TimeSeries.lazy(self.v.times, lambda i: zero, "R"),
            nu=nu,
            gamma=gamma,
            level=level,
            metadata=dict(self.metadata),
        )


def integrating_factor_rk4(
    modes: Array,
    decay: Array,
    nonlinear: NonlinearTerm,
    t: float,
    h: float,
) -> Array:
    """One step of RK4 for û' = −D û + N(t, û) with the factor e^{−D h}.

    ``decay`` is the (broadcastable) symbol D ≥ 0.
    """
    full = np.exp(-decay * h)
    half = np.exp(-decay * (0.5 * h))
    k1 = nonlinear(t, modes)
    k2 = nonlinear(t + 0.5 * h, half * (modes + 0.5 * h * k1))
    k3 = nonlinear(t + 0.5 * h, half * modes + 0.5 * h * k2)
    k4 = nonlinear(t + h, full * modes + h * half * k3)
    return full * modes + (h / 6.0) * (full * k1 + 2.0 * half * (k2 + k3) + k4)


def projected_nonlinearity(grid: Grid, dealiased: bool = True) -> NonlinearTerm:
    """û ↦ −P div(u⊗u) in mode space."""
    ik = odd_symbols(grid)
    mask = grid.dealias_mask() if dealiased else None
    k1, k2, k3 = grid.k_vectors()
    k_sq = grid.k_squared_safe()

    def term(_: float, modes: Array) -> Array:
        u = inverse(modes).real
        flux = forward(u[:, None] * u[None, :])
        if mask is not None:
            flux = flux * mask
        div = flux[:, 0] * ik[0] + flux[:, 1] * ik[1] + flux[:, 2] * ik[2]
        k_dot = k1 * div[0] + k2 * div[1] + k3 * div[2]
        factor = k_dot / k_sq
        return -np.stack([div[0] - k1 * factor, div[1] - k2 * factor, div[2] - k3 * factor])

    return term


def fns_rate(v: PeriodicField, nu: float, gamma: float, dealias: bool = True) -> PeriodicField:
    """∂_t v = −P div(v⊗v) − ν(−Δ)^γ v evaluated from the equation."""
    grid = v.grid
    nonlinear = projected_nonlinearity(grid, dealias)(0.0, v.modes)
    modes = nonlinear - nu * fractional_symbol(grid, gamma) * v.modes
    return PeriodicField.from_modes(grid, Rank.VECTOR, modes)


def _gradient_sup(grid: Grid, modes: Array) -> float:
    ik = odd_symbols(grid)
    grads = [inverse(modes * s).real for s in ik]
    return float(np.max(np.sqrt(sum(np.sum(g**2, axis=0) for g in grads))))


def prepare_initial(u0: PeriodicField) -> PeriodicField:
    """Check div u0 = 0, drop Nyquist modes and project.

    Raises:
        ParameterError: If u0 is not divergence-free to tolerance
    """
    if u0.rank is not Rank.VECTOR:
        raise ParameterError("initial velocity must be a vector field")
    div = divergence(u0).sup_norm()
    scale = max(1.0, _gradient_sup(u0.grid, u0.modes))
    if div > get_tolerances().solver_divergence * scale:
        raise ParameterError(f"initial velocity not divergence-free (|div u0| = {div:.3e})")
    return leray_project(strip_nyquist(u0))


def horizon_ratio(u0: PeriodicField, horizon: float, config: SolverConfig) -> float:
    """horizon · ‖u0‖_{1+α} / c, the fraction of the local-existence bound used."""
    norm = ledger_norm(u0, 1.0 + config.alpha)
    return horizon * norm / config.horizon_constant


def _segments(
    t0: float, span: float, config: SolverConfig, output_times: Optional[Sequence[float]]
) -> List[Tuple[float, int]]:
    """(target time, step count) pairs; every target is an output sample."""
    if output_times is None:
        steps, h = config.steps(span)
        marks = list(range(config.save_every, steps + 1, config.save_every))
        if not marks or marks[-1] != steps:
            marks.append(steps)
        counts = np.diff([0] + marks)
        return [(t0 + m * h, int(c)) for m, c in zip(marks, counts)]
    targets = [float(t) for t in output_times if float(t) > t0 + 1e-12]
    if any(b <= a for a, b in zip(targets, targets[1:])):
        raise ParameterError("output times must be strictly increasing")
    segments = []
    previous = t0
    for target in targets:
        segments.append((target, config.steps(target - previous)[0]))
        previous = target
    return segments


def solve_fns(
    u0: PeriodicField,
    nu: float,
    gamma: float,
    config: SolverConfig,
    t0: float = 0.0,
    horizon: Optional[float] = None,
    output_times: Optional[Sequence[float]] = None,
) -> SolveResult:
    """Integrate from t0 over the horizon (config.horizon unless given).

    With ``output_times`` the integration lands exactly on each listed time
    after t0 and stops at the last one; the horizon is then ignored.

    Raises:
        CFLViolation: If dt·max|v|/h exceeds config.cfl at any step
        BlowUpError: If [v]_1 grows beyond blowup_factor times its initial value
        HorizonError: If enforce_horizon is set and the horizon exceeds c/‖u0‖_{1+α}
    """
    started = time.monotonic()
    grid = u0.grid
    u = prepare_initial(u0)
    segments = _segments(t0, config.horizon if horizon is None else horizon, config, output_times)
    span = segments[-1][0] - t0 if segments else 0.0

    ratio = horizon_ratio(u, span, config)
    if ratio > 1.0:
        message = f"horizon {span:.4g} uses {ratio:.2f}x the local-existence bound"
        if config.enforce_horizon:
            raise HorizonError(message)
        logger.debug(message)

    decay = nu * fractional_symbol(grid, gamma) if nu > 0 else np.zeros(grid.shape)
    nonlinear = projected_nonlinearity(grid, config.dealias)
    modes = u.modes.copy()
    initial_gradient = ledger_seminorm(u, 1.0)
    threshold = config.blowup_factor * max(initial_gradient, 1e-300)

    times: List[float] = [t0]
    fields: List[PeriodicField] = [u]
    max_courant = 0.0
    largest_step = 0.0
    total = 0
    t = t0
    for target, count in segments:
        start = t
        h = (target - start) / count
        largest_step = max(largest_step, h)
        for j in range(1, count + 1):
            speed = float(np.max(np.sqrt(np.sum(inverse(modes).real ** 2, axis=0))))
            courant = h * speed / grid.spacing
            max_courant = max(max_courant, courant)
            if courant > config.cfl:
                raise CFLViolation(
                    f"Courant number {courant:.3f} > {config.cfl} at t={t:.4g} (dt={h:.4g})"
                )
            modes = integrating_factor_rk4(modes, decay, nonlinear, t, h)
            t = start + j * h
            total += 1
            gradient_norm = _gradient_sup(grid, modes)
            if initial_gradient > 0 and gradient_norm > threshold:
                raise BlowUpError(
                    f"[v]_1 = {gradient_norm:.3e} exceeds {config.blowup_factor}x initial",
                    t - h,
                )
            logger.debug(f"fns step {total} t={t:.4g} courant={courant:.3f}")
        t = target
        times.append(target)
        fields.append(PeriodicField.from_modes(grid, Rank.VECTOR, modes))

    v = TimeSeries(times, fields, name="v")
    p = v.map(pressure_from_velocity, name="p")
    elapsed = time.monotonic() - started
    return SolveResult(
        v,
        p,
        {
            "steps": total,
            "dt": largest_step,
            "t0": t0,
            "horizon": span,
            "horizon_ratio": ratio,
            "max_courant": max_courant,
            "elapsed": elapsed,
        },
    )
