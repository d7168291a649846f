#!/usr/bin/env python3
"""Time series of fields and the Navier–Stokes–Reynolds triple (v, p, R̊).

A ``TimeSeries`` is either stored (a list of fields) or lazy (a factory called
per index, with a small cache). The triple stores v and derives p and R̊ on
demand; its residual checks are the common oracle for the gluing and assembly
stages.
"""

import hashlib
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Sequence

import numpy as np

from .errors import FieldShapeError, ParameterError
from .logger import get_logger
from .operators.multipliers import fractional_laplacian
from .spectral.field import PeriodicField, Rank
from .spectral.grid import Grid
from .spectral.ops import divergence, gradient, outer
from .spectral.random_fields import random_divergence_free

logger = get_logger(__name__)

LAZY_CACHE = 4
STENCIL_POINTS = 5


def stencil_weights(offsets: Sequence[float], derivative: int = 1) -> np.ndarray:
    """Finite-difference weights for the given offsets (in units of the step)."""
    rank = len(offsets)
    taylor = np.array(
        [[d**row / math.factorial(row) for d in offsets] for row in range(rank)], dtype=np.float64
    )
    rhs = np.zeros(rank)
    rhs[derivative] = 1.0
    return np.linalg.solve(taylor, rhs)


def stencil_offsets(index: int, count: int, points: int = STENCIL_POINTS) -> List[int]:
    """Centered offsets, shifted inward near the ends of the series."""
    points = min(points, count)
    half = points // 2
    start = min(max(index - half, 0), count - points)
    return [j - index for j in range(start, start + points)]


class TimeSeries:
    """Fields sampled at increasing times."""

    def __init__(
        self,
        times: Sequence[float],
        fields: Optional[Sequence[PeriodicField]] = None,
        factory: Optional[Callable[[int], PeriodicField]] = None,
        name: str = "",
    ) -> None:
        self.times = np.asarray(times, dtype=np.float64)
        self.name = name
        if (fields is None) == (factory is None):
            raise ParameterError("a time series needs exactly one of fields or factory")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ParameterError("series times must increase strictly")
        if fields is not None and len(fields) != len(self.times):
            raise FieldShapeError(f"{len(fields)} fields for {len(self.times)} times")
        self._fields = list(fields) if fields is not None else None
        self._factory = factory
        self._cache: "OrderedDict[int, PeriodicField]" = OrderedDict()

    @classmethod
    def lazy(
        cls, times: Sequence[float], factory: Callable[[int], PeriodicField], name: str = ""
    ) -> "TimeSeries":
        return cls(times, factory=factory, name=name)

    @property
    def is_lazy(self) -> bool:
        return self._fields is None

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, index: int) -> PeriodicField:
        if index < 0:
            index += len(self)
        if not 0 <= index < len(self):
            raise IndexError(f"series index {index} out of range")
        if self._fields is not None:
            return self._fields[index]
        if index in self._cache:
            self._cache.move_to_end(index)
            return self._cache[index]
        assert self._factory is not None
        value = self._factory(index)
        self._cache[index] = value
        if len(self._cache) > LAZY_CACHE:
            self._cache.popitem(last=False)
        return value

    def __iter__(self) -> Iterator[PeriodicField]:
        for i in range(len(self)):
            yield self[i]

    @property
    def grid(self) -> Grid:
        return self[0].grid

    @property
    def dt(self) -> float:
        """Uniform spacing (mean spacing for non-uniform series)."""
        if len(self) < 2:
            return 0.0
        return float((self.times[-1] - self.times[0]) / (len(self) - 1))

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        """Index of the sample at time t.

        Raises:
            KeyError: If no sample lies within tol of t
        """
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > tol * max(1.0, abs(t)):
            raise KeyError(f"no sample at t={t}")
        return idx

    def map(self, fn: Callable[[PeriodicField], PeriodicField], name: str = "") -> "TimeSeries":
        """Lazy pointwise-in-time image of the series."""
        return TimeSeries.lazy(self.times, lambda i: fn(self[i]), name or self.name)

    def materialize(self) -> "TimeSeries":
        if not self.is_lazy:
            return self
        return TimeSeries(self.times, [self[i] for i in range(len(self))], name=self.name)

    def time_derivative(self, index: int, points: int = STENCIL_POINTS) -> PeriodicField:
        """Finite-difference ∂_t at a sample (centered where possible)."""
        if len(self) < 2:
            raise ParameterError("time derivative needs at least two samples")
        offsets = stencil_offsets(index, len(self), points)
        dt = float(np.mean(np.diff(self.times)))
        weights = stencil_weights(offsets) / dt
        values = sum(w * self[index + o].values for w, o in zip(weights, offsets))
        return self[index].with_values(np.asarray(values))

    def restrict(self, start: float, stop: float) -> "TimeSeries":
        """Sub-series on [start, stop] (inclusive with round-off slack)."""
        slack = 1e-9 * max(1.0, abs(stop))
        idx = [i for i, t in enumerate(self.times) if start - slack <= t <= stop + slack]
        if self.is_lazy:
            return TimeSeries.lazy(self.times[idx], lambda j: self[idx[j]], self.name)
        return TimeSeries(self.times[idx], [self[i] for i in idx], name=self.name)

    def scalar(self, fn: Callable[[PeriodicField], float]) -> np.ndarray:
        return np.array([fn(f) for f in self])


@dataclass
class ReynoldsTriple:
    """(v, p, R̊) on a common time grid, with torus viscosity ν and order γ.

    ``dvdt`` is an optional exact time derivative of v; when absent the
    residual uses finite differences on the series.
    """

    v: TimeSeries
    p: TimeSeries
    R: TimeSeries
    nu: float
    gamma: float
    level: int = 0
    dvdt: Optional[TimeSeries] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.v.times

    @property
    def grid(self) -> Grid:
        return self.v.grid

    def time_derivative(self, index: int) -> PeriodicField:
        if self.dvdt is not None:
            return self.dvdt[index]
        return self.v.time_derivative(index)

    def residual_terms(self, index: int) -> Dict[str, PeriodicField]:
        """Each term of ∂_t v + div(v⊗v) + ∇p + ν(−Δ)^γ v − div R̊."""
        v = self.v[index]
        terms = {
            "time_derivative": self.time_derivative(index),
            "transport": divergence(outer(v, v)),
            "pressure": gradient(self.p[index]),
            "dissipation": fractional_laplacian(v, self.gamma) * self.nu,
            "stress": -divergence(self.R[index]),
        }
        return terms

    def strong_residual(self, index: int) -> Dict[str, float]:
        """Sup norm of the pointwise residual and its relative size."""
        terms = self.residual_terms(index)
        total = sum(t.values for t in terms.values())
        scale = max(max(t.sup_norm() for t in terms.values()), 1e-300)
        absolute = float(np.max(np.sqrt(np.sum(np.asarray(total) ** 2, axis=0))))
        return {"absolute": absolute, "relative": absolute / scale}

    def weak_residual(self, index: int, tests: Sequence[PeriodicField]) -> float:
        """max over φ of |⨍ residual·φ| / Σ_terms |⨍ term·φ| (pressure drops for div-free φ)."""
        terms = self.residual_terms(index)
        worst = 0.0
        for phi in tests:
            pairings = {k: float(np.mean(np.sum(t.values * phi.values, axis=0))) for k, t in terms.items()}
            scale = sum(abs(x) for x in pairings.values())
            if scale == 0.0:
                continue
            worst = max(worst, abs(sum(pairings.values())) / scale)
        return worst

    def divergence_norm(self, index: int) -> float:
        return divergence(self.v[index]).sup_norm()

    def trace_norm(self, index: int) -> float:
        return self.R[index].trace().sup_norm()

    def initial_digest(self) -> str:
        return field_digest(self.v[0])


def random_test_fields(grid: Grid, count: int = 20, seed: int = 0, k_max: int = 4) -> List[PeriodicField]:
    """Seeded random smooth divergence-free test fields."""
    rng = np.random.default_rng(seed)
    return [random_divergence_free(grid, rng, k_max=k_max) for _ in range(count)]


def field_digest(f: PeriodicField) -> str:
    """SHA-256 over grid size, rank and the little-endian nodal values."""
    h = hashlib.sha256()
    h.update(f"{f.grid.n}:{f.rank.value}".encode())
    h.update(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    return h.hexdigest()


def zero_triple(grid: Grid, times: Sequence[float], nu: float, gamma: float) -> ReynoldsTriple:
    """(0, 0, 0) on the time grid."""
    zero_v = PeriodicField.zeros(grid, Rank.VECTOR)
    zero_p = PeriodicField.zeros(grid, Rank.SCALAR)
    zero_r = PeriodicField.zeros(grid, Rank.SYMTENSOR)
    n = len(times)
    return ReynoldsTriple(
        v=TimeSeries(times, [zero_v] * n, name="v"),
        p=TimeSeries(times, [zero_p] * n, name="p"),
        R=TimeSeries(times, [zero_r] * n, name="R"),
        nu=nu,
        gamma=gamma,
        metadata={"seed": "zero_seed"},
    )


def describe_series(series: TimeSeries) -> Mapping[str, Any]:
    return {
        "name": series.name,
        "samples": len(series),
        "start": float(series.times[0]),
        "stop": float(series.times[-1]),
        "lazy": series.is_lazy,
    }
