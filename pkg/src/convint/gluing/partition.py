#!/usr/bin/env python3
"""Time partition {t_i, I_i, J_i} of [0, T] and the gluing cutoffs χ_i.

With τ the gluing time scale, t_i = iτ and

    I_i = [t_{i+1} + τ/3, t_{i+1} + 2τ/3] ∩ [0, T]
    J_0 = [0, t_1 + τ/3),  J_i = (t_{i+1} − τ/3, t_{i+1} + τ/3)  (i ≥ 1)

so the I's and J's tile [0, T]. χ_i equals 1 on J_i, ramps up on I_{i−1}
and down on I_i; the last cutoff never ramps down.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ParameterError
from ..logger import get_logger
from ..spectral.mollifier import smooth_step, smooth_step_derivative

logger = get_logger(__name__)

Interval = Tuple[float, float]

SLACK = 1e-12


@dataclass(frozen=True)
class TimePartition:
    """Gluing intervals for scale ``tau`` on [0, horizon] (torus time)."""

    tau: float
    horizon: float

    def __post_init__(self) -> None:
        if not self.tau > 0.0:
            raise ParameterError(f"gluing time scale must be positive, got {self.tau}")
        if not self.horizon > 0.0:
            raise ParameterError(f"horizon must be positive, got {self.horizon}")

    @property
    def count(self) -> int:
        """Number of cutoffs: every i whose J_i meets [0, T]."""
        # J_i starts at t_{i+1} − τ/3 = (i + 2/3)τ for i ≥ 1
        last = math.ceil(self.horizon / self.tau - 2.0 / 3.0 - SLACK) - 1
        return max(1, last + 1)

    @property
    def degenerate(self) -> bool:
        return self.count == 1

    def start(self, i: int) -> float:
        """t_i = iτ."""
        return i * self.tau

    def interval_I(self, i: int) -> Optional[Interval]:
        """I_i clipped to [0, T]; None when empty."""
        a = (i + 1) * self.tau + self.tau / 3.0
        b = (i + 1) * self.tau + 2.0 * self.tau / 3.0
        if a >= self.horizon:
            return None
        return a, min(b, self.horizon)

    def interval_J(self, i: int) -> Optional[Interval]:
        """J_i clipped to [0, T] (open ends reported as plain endpoints)."""
        a = 0.0 if i == 0 else (i + 1) * self.tau - self.tau / 3.0
        b = (i + 1) * self.tau + self.tau / 3.0
        if a >= self.horizon:
            return None
        return a, min(b, self.horizon)

    def transitions(self) -> List[int]:
        """Indices i with χ_i handing over to χ_{i+1} inside [0, T]."""
        return [i for i in range(self.count - 1) if self.interval_I(i) is not None]

    def window(self, i: int) -> Interval:
        """Time span on which v_i is needed: [t_i, end of supp χ_i]."""
        if i == self.count - 1:
            return self.start(i), self.horizon
        interval = self.interval_I(i)
        assert interval is not None
        return self.start(i), interval[1]

    def locate(self, t: float) -> Tuple[str, int]:
        """("I", i) or ("J", i) for the piece containing t."""
        for i in self.transitions():
            a, b = self.interval_I(i)  # type: ignore[misc]
            if a - SLACK <= t <= b + SLACK:
                return "I", i
        for i in range(self.count):
            piece = self.interval_J(i)
            if piece is not None and piece[0] - SLACK <= t <= piece[1] + SLACK:
                return "J", i
        raise ParameterError(f"t={t:.6g} outside [0, {self.horizon:.6g}]")

    def midpoints(self, piece: str) -> List[float]:
        """Centre of every I_i (or J_i) that lies in [0, T]."""
        out = []
        for i in range(self.count):
            interval = self.interval_I(i) if piece == "I" else self.interval_J(i)
            if interval is None or (piece == "I" and i not in self.transitions()):
                continue
            out.append(0.5 * (interval[0] + interval[1]))
        return out

    def check_decomposition(self, samples: int = 2001) -> Dict[str, Any]:
        """Every sample of [0, T] lies in exactly one piece."""
        grid = np.linspace(0.0, self.horizon, samples)
        hits = np.zeros(samples, dtype=int)
        for i in self.transitions():
            a, b = self.interval_I(i)  # type: ignore[misc]
            hits += (grid >= a) & (grid <= b)
        for i in range(self.count):
            piece = self.interval_J(i)
            if piece is None:
                continue
            a, b = piece
            inside = (grid > a) & (grid < b) if i > 0 else (grid >= a) & (grid < b)
            if i == self.count - 1:
                inside |= grid > b - SLACK
            hits += inside
        return {"covered": bool(np.all(hits >= 1)), "disjoint": bool(np.all(hits <= 1))}

    def describe(self) -> Dict[str, Any]:
        return {
            "tau": self.tau,
            "horizon": self.horizon,
            "cutoffs": self.count,
            "I": [list(self.interval_I(i) or ()) for i in self.transitions()],
            "J": [list(self.interval_J(i) or ()) for i in range(self.count)],
        }


@dataclass(frozen=True)
class ChiCutoffs:
    """χ_i(t) built from the smooth step on each I_i."""

    partition: TimePartition

    @property
    def count(self) -> int:
        return self.partition.count

    def _ramp(self, i: int, t: np.ndarray) -> Tuple[np.ndarray, float]:
        interval = (i + 1) * self.partition.tau + self.partition.tau / 3.0
        width = self.partition.tau / 3.0
        return (t - interval) / width, width

    def value(self, i: int, t: Any) -> np.ndarray:
        """χ_i at the given times."""
        tt = np.asarray(t, dtype=np.float64)
        out = np.ones_like(tt)
        if i > 0:
            s, _ = self._ramp(i - 1, tt)
            out = out * smooth_step(s)
        if i < self.count - 1:
            s, _ = self._ramp(i, tt)
            out = out * (1.0 - smooth_step(s))
        return out

    def derivative(self, i: int, t: Any) -> np.ndarray:
        """∂_tχ_i, exact."""
        tt = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(tt)
        if i > 0:
            s, width = self._ramp(i - 1, tt)
            out = out + smooth_step_derivative(s) / width
        if i < self.count - 1:
            s, width = self._ramp(i, tt)
            out = out - smooth_step_derivative(s) / width
        return out

    def sampled(self, times: Sequence[float]) -> np.ndarray:
        """(count, len(times)) array of χ_i values."""
        return np.stack([self.value(i, times) for i in range(self.count)])

    def active(self, t: float, tol: float = 0.0) -> List[int]:
        """Indices with χ_i(t) > tol."""
        return [i for i in range(self.count) if float(self.value(i, t)) > tol]

    def derivative_constants(self, orders: Sequence[int] = (1, 2), samples: int = 4001) -> Dict[int, float]:
        """sup_t |∂_t^N χ_i|·τ^N for each order (N ≥ 2 by differentiating ∂_tχ numerically)."""
        tau = self.partition.tau
        grid = np.linspace(0.0, self.partition.horizon, samples)
        out: Dict[int, float] = {}
        for order in orders:
            worst = 0.0
            for i in range(self.count):
                values = self.derivative(i, grid)
                for _ in range(order - 1):
                    values = np.gradient(values, grid)
                worst = max(worst, float(np.max(np.abs(values))))
            out[order] = worst * tau**order
        return out

    def verify(self, samples: int = 2001) -> Dict[str, Any]:
        """Partition of unity, χ_i = 1 on J_i, support separation and derivative bounds."""
        part = self.partition
        grid = np.linspace(0.0, part.horizon, samples)
        values = self.sampled(grid)
        unity = float(np.max(np.abs(values.sum(axis=0) - 1.0)))
        on_j = 0.0
        for i in range(self.count):
            piece = part.interval_J(i)
            if piece is None:
                continue
            a, b = piece
            inside = (grid > a) & (grid < b) if i > 0 else (grid >= a) & (grid < b)
            if np.any(inside):
                on_j = max(on_j, float(np.max(np.abs(values[i, inside] - 1.0))))
        overlap = 0.0
        for i in range(self.count - 2):
            overlap = max(overlap, float(np.max(np.abs(values[i] * values[i + 2]))))
        return {
            "partition_of_unity": unity,
            "one_on_J": on_j,
            "separated_supports": overlap,
            "derivative_constants": self.derivative_constants(),
        }


def build_chi(partition: TimePartition) -> ChiCutoffs:
    """Cutoffs for the partition; T < τ gives the single cutoff χ_0 ≡ 1."""
    chi = ChiCutoffs(partition)
    if partition.degenerate:
        logger.info(f"horizon {partition.horizon:.4g} within one gluing interval; single cutoff")
    else:
        logger.debug(f"{chi.count} gluing cutoffs with tau={partition.tau:.4g}")
    return chi
