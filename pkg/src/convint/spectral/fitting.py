#!/usr/bin/env python3
"""Log-log regressions for convergence rates, decay laws and fitted constants."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ParameterError


@dataclass(frozen=True)
class PowerLawFit:
    """y ≈ constant · x^slope."""

    slope: float
    constant: float
    residual: float
    points: int


def fit_power_law(
    x: Sequence[float], y: Sequence[float], floor: float = 0.0
) -> PowerLawFit:
    """Least-squares fit of log y against log x.

    Points with y <= floor are dropped (round-off plateau).

    Raises:
        ParameterError: If fewer than two usable points remain
    """
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    keep = (xs > 0) & (ys > floor)
    if int(np.count_nonzero(keep)) < 2:
        raise ParameterError("power-law fit needs at least two positive samples")
    lx, ly = np.log(xs[keep]), np.log(ys[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.max(np.abs(ly - (slope * lx + intercept))))
    return PowerLawFit(float(slope), float(np.exp(intercept)), residual, int(keep.sum()))


def fitted_constant(lhs: Sequence[float], rhs: Sequence[float]) -> float:
    """Smallest C with lhs <= C·rhs over all samples (rhs > 0)."""
    left = np.asarray(lhs, dtype=np.float64)
    right = np.asarray(rhs, dtype=np.float64)
    mask = right > 0
    if not np.any(mask):
        return 0.0
    return float(np.max(left[mask] / right[mask]))


def convergence_order(errors: Sequence[float], refinement: float = 2.0) -> float:
    """Observed order from errors at successively refined steps."""
    e = np.asarray(errors, dtype=np.float64)
    steps = refinement ** -np.arange(len(e), dtype=np.float64)
    return fit_power_law(steps, e).slope
