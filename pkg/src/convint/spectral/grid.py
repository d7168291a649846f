#!/usr/bin/env python3
"""Collocation grid on the torus [0, 2π)³ and its cached wavenumber tables."""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.typing import NDArray

from ..errors import ParameterError

FloatArray = NDArray[np.float64]
BoolArray = NDArray[np.bool_]

MIN_POINTS = 8


@dataclass(frozen=True)
class Grid:
    """Uniform n³ grid with a dealiasing rule shared by all axes."""

    n: int
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self) -> None:
        if self.n < MIN_POINTS or self.n % 2:
            raise ParameterError(
                f"grid needs an even number of points per axis >= {MIN_POINTS}, got {self.n}"
            )
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ParameterError(
                f"dealias fraction must lie in (0, 1], got {self.dealias_fraction}"
            )

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def size(self) -> int:
        return self.n**3

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.n

    @property
    def cutoff(self) -> float:
        """Modes with every |k_j| strictly below this survive dealiasing."""
        return self.dealias_fraction * self.n / 2.0

    @property
    def max_retained(self) -> int:
        """Largest integer |k_j| kept by the dealiasing mask."""
        return int(math.ceil(self.cutoff) - 1)

    def wavenumbers(self) -> FloatArray:
        return _wavenumbers(self.n)

    def k_vectors(self) -> Tuple[FloatArray, FloatArray, FloatArray]:
        """Broadcastable (n,1,1), (1,n,1), (1,1,n) wavenumber arrays."""
        k = _wavenumbers(self.n)
        return (k[:, None, None], k[None, :, None], k[None, None, :])

    def k_squared(self) -> FloatArray:
        return _k_squared(self.n)

    def k_squared_safe(self) -> FloatArray:
        """|k|² with the zero mode replaced by 1 (for divisions)."""
        return _k_squared_safe(self.n)

    def nyquist_mask(self) -> BoolArray:
        """True on modes where any component equals -n/2."""
        return _nyquist_mask(self.n)

    def dealias_mask(self) -> BoolArray:
        return _dealias_mask(self.n, self.dealias_fraction)

    def coordinates(self) -> FloatArray:
        return np.arange(self.n) * self.spacing

    def mesh(self) -> Tuple[FloatArray, FloatArray, FloatArray]:
        """Broadcastable coordinate arrays x₁, x₂, x₃."""
        x = self.coordinates()
        return (x[:, None, None], x[None, :, None], x[None, None, :])

    def full_mesh(self) -> FloatArray:
        """Stacked (3, n, n, n) coordinates."""
        x1, x2, x3 = self.mesh()
        return np.stack(np.broadcast_arrays(x1, x2, x3)).astype(np.float64)

    def describe(self) -> dict[str, float]:
        return {
            "n": self.n,
            "dealias_fraction": self.dealias_fraction,
            "spacing": self.spacing,
            "cutoff": self.cutoff,
        }


@lru_cache(maxsize=16)
def _wavenumbers(n: int) -> FloatArray:
    k = np.fft.fftfreq(n, 1.0 / n)
    k.setflags(write=False)
    return k


@lru_cache(maxsize=16)
def _k_squared(n: int) -> FloatArray:
    k = _wavenumbers(n)
    k2 = k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2
    k2.setflags(write=False)
    return k2


@lru_cache(maxsize=16)
def _k_squared_safe(n: int) -> FloatArray:
    k2 = _k_squared(n).copy()
    k2[0, 0, 0] = 1.0
    k2.setflags(write=False)
    return k2


@lru_cache(maxsize=16)
def _nyquist_mask(n: int) -> BoolArray:
    k = _wavenumbers(n)
    edge = np.abs(k) == n // 2
    mask = edge[:, None, None] | edge[None, :, None] | edge[None, None, :]
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=32)
def _dealias_mask(n: int, fraction: float) -> BoolArray:
    k = np.abs(_wavenumbers(n))
    keep = k < fraction * n / 2.0
    mask = keep[:, None, None] & keep[None, :, None] & keep[None, None, :]
    mask.setflags(write=False)
    return mask
