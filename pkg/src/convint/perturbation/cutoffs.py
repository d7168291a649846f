#!/usr/bin/env python3
"""Space-time cutoffs η_i for the perturbation.

η_i equals 1 on I_i. Inside J_i (centred at t_{i+1}) the handover from η_{i−1}
to η_i happens across the surface t = t_{i+1} + A sin x₁: η_{i−1} ramps down
before it and η_i ramps up after it, separated by a gap. Away from the
surface one of the two equals 1, so Σ_i ⨍η_i² stays bounded below at every
time. η_0 is 1 on J_0 and the last cutoff stays 1 up to T.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..gluing.partition import SLACK, TimePartition
from ..logger import get_logger
from ..spectral.field import PeriodicField, Rank
from ..spectral.grid import Grid
from ..spectral.mollifier import smooth_step, smooth_step_derivative

logger = get_logger(__name__)

AMPLITUDE_FRACTION = 1.0 / 6.0
GAP_FRACTION = 1.0 / 24.0
RAMP_FRACTION = 1.0 / 8.0


@dataclass(frozen=True)
class EtaCutoffs:
    """η_i(x₁, t) for every transition of the partition (a single η ≡ 1 when there is none)."""

    partition: TimePartition
    amplitude: float
    gap: float
    ramp: float

    @property
    def count(self) -> int:
        return max(1, len(self.partition.transitions()))

    def _surface(self, i: int, x1: np.ndarray) -> np.ndarray:
        """Switching surface inside J_i."""
        return (i + 1) * self.partition.tau + self.amplitude * np.sin(x1)

    def _up(self, i: int, t: float, x1: np.ndarray) -> np.ndarray:
        return (t - (self._surface(i, x1) + 0.5 * self.gap)) / self.ramp

    def _down(self, i: int, t: float, x1: np.ndarray) -> np.ndarray:
        return (t - (self._surface(i + 1, x1) - 0.5 * self.gap - self.ramp)) / self.ramp

    def profile(self, i: int, t: float, x1: np.ndarray) -> np.ndarray:
        """η_i on the x₁ coordinates at time t."""
        x1 = np.asarray(x1, dtype=np.float64)
        out = np.ones_like(x1)
        if i > 0:
            out = out * smooth_step(self._up(i, t, x1))
        if i < self.count - 1:
            out = out * (1.0 - smooth_step(self._down(i, t, x1)))
        return out

    def profile_rate(self, i: int, t: float, x1: np.ndarray) -> np.ndarray:
        """∂_tη_i on the x₁ coordinates, exact."""
        x1 = np.asarray(x1, dtype=np.float64)
        up = np.ones_like(x1)
        d_up = np.zeros_like(x1)
        if i > 0:
            s = self._up(i, t, x1)
            up = smooth_step(s)
            d_up = smooth_step_derivative(s) / self.ramp
        down = np.ones_like(x1)
        d_down = np.zeros_like(x1)
        if i < self.count - 1:
            s = self._down(i, t, x1)
            down = 1.0 - smooth_step(s)
            d_down = -smooth_step_derivative(s) / self.ramp
        return d_up * down + up * d_down

    def field(self, i: int, t: float, grid: Grid) -> PeriodicField:
        values = self.profile(i, t, grid.coordinates())[:, None, None]
        return PeriodicField(grid, Rank.SCALAR, np.broadcast_to(values, grid.shape).copy())

    def support(self, i: int) -> tuple[float, float]:
        """Time span outside which η_i vanishes."""
        start = 0.0 if i == 0 else (i + 1) * self.partition.tau - self.amplitude + 0.5 * self.gap
        if i == self.count - 1:
            return start, self.partition.horizon
        stop = (i + 2) * self.partition.tau + self.amplitude - 0.5 * self.gap
        return start, min(stop, self.partition.horizon)

    def active(self, t: float) -> List[int]:
        """Indices whose support contains t."""
        return [i for i in range(self.count) if self.support(i)[0] - SLACK <= t <= self.support(i)[1] + SLACK]

    def energy_sum(self, t: float, x1: np.ndarray) -> float:
        """Σ_i ⨍η_i²(·, t); η depends on x₁ only, so the x₁ average is the torus average."""
        return float(sum(np.mean(self.profile(i, t, x1) ** 2) for i in range(self.count)))

    def verify(self, grid: Grid, times: Sequence[float]) -> Dict[str, Any]:
        """Properties of the cutoffs measured on the x₁ nodes and the given times."""
        x1 = grid.coordinates()
        part = self.partition
        lower, upper, overlap, on_i, outside = 0.0, 0.0, 0.0, 0.0, 0.0
        c0 = np.inf
        rate = 0.0
        for t in times:
            t = float(t)
            values = np.stack([self.profile(i, t, x1) for i in range(self.count)])
            lower = min(lower, float(values.min()))
            upper = max(upper, float(values.max()))
            if self.count > 1:
                pairs = values[:, None] * values[None, :]
                pairs[np.arange(self.count), np.arange(self.count)] = 0.0
                overlap = max(overlap, float(pairs.max()))
            c0 = min(c0, float(np.sum(np.mean(values**2, axis=1))))
            for i in range(self.count):
                rate = max(rate, float(np.max(np.abs(self.profile_rate(i, t, x1)))))
                interval = part.interval_I(i) if i in part.transitions() else None
                if interval is not None and interval[0] <= t <= interval[1]:
                    on_i = max(on_i, float(np.max(np.abs(values[i] - 1.0))))
                start, stop = self.support(i)
                if not start - SLACK <= t <= stop + SLACK:
                    outside = max(outside, float(np.max(values[i])))
        spatial = self.amplitude / self.ramp * float(np.max(np.abs(smooth_step_derivative(np.linspace(0, 1, 1001)))))
        return {
            "range": [lower, upper],
            "overlap": overlap,
            "one_on_I": on_i,
            "outside_support": outside,
            "c0": float(c0),
            "time_derivative_constant": rate * part.tau,
            "space_derivative_constant": spatial,
        }

    def describe(self) -> Dict[str, Any]:
        return {
            "cutoffs": self.count,
            "amplitude": self.amplitude,
            "gap": self.gap,
            "ramp": self.ramp,
            "supports": [list(self.support(i)) for i in range(self.count)],
        }


def build_eta(partition: TimePartition, fractions: Optional[Dict[str, float]] = None) -> EtaCutoffs:
    """Cutoffs with amplitude τ/6, gap τ/24 and ramp τ/8 unless overridden."""
    fractions = fractions or {}
    tau = partition.tau
    eta = EtaCutoffs(
        partition,
        amplitude=fractions.get("amplitude", AMPLITUDE_FRACTION) * tau,
        gap=fractions.get("gap", GAP_FRACTION) * tau,
        ramp=fractions.get("ramp", RAMP_FRACTION) * tau,
    )
    reach = eta.amplitude + 0.5 * eta.gap + eta.ramp
    if reach > tau / 3.0:
        logger.warning(f"eta transition reaches {reach / tau:.3f} tau beyond the switching centre (> 1/3)")
    logger.debug(f"{eta.count} eta cutoffs: {eta.describe()}")
    return eta
