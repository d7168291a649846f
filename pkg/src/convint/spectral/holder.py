#!/usr/bin/env python3
"""Discrete Hölder seminorm estimators.

[f]_m = max over |θ| = m of sup |D^θ f| and
[f]_{m+α} = max over |θ| = m of sup |D^θ f(x) − D^θ f(y)| / |x − y|^α.

The quotient is sampled over grid-aligned displacements along the 13 lattice
directions of the cube (every multiple up to half the period) plus a set of
seeded random displacements. The result is a lower bound of the true
seminorm. Component norms are Euclidean.
"""

import math
from dataclasses import dataclass
from dataclasses import field as dc_field
from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..errors import HolderOrderError
from .field import Array, PeriodicField
from .ops import derivative, multi_indices

DEFAULT_MAX_ORDER = 4
RANDOM_OFFSETS = 64

LATTICE_DIRECTIONS = np.array(
    [
        (1, 0, 0), (0, 1, 0), (0, 0, 1),
        (1, 1, 0), (1, -1, 0), (0, 1, 1), (0, 1, -1), (1, 0, 1), (1, 0, -1),
        (1, 1, 1), (1, 1, -1), (1, -1, 1), (-1, 1, 1),
    ],
    dtype=np.int64,
)


@dataclass(frozen=True)
class HolderEstimate:
    """Estimated seminorm [f]_{m+α}."""

    exponent: float
    value: float
    sampling_offsets: Array
    order: int
    alpha: float
    metadata: Dict[str, Any] = dc_field(default_factory=dict)


def split_exponent(exponent: float) -> tuple[int, float]:
    """exponent = m + α with integer m and α ∈ [0, 1)."""
    m = int(math.floor(exponent + 1e-12))
    alpha = max(exponent - m, 0.0)
    if alpha < 1e-12:
        alpha = 0.0
    return m, alpha


def sampling_offsets(
    n: int,
    multiples: Optional[Sequence[int]] = None,
    random_count: int = RANDOM_OFFSETS,
    seed: int = 0,
) -> Array:
    """Integer displacements used by the α-quotient."""
    mults = list(range(1, n // 2 + 1)) if multiples is None else [m for m in multiples if 0 < m <= n // 2]
    lattice = [d * m for d in LATTICE_DIRECTIONS for m in mults]
    rng = np.random.default_rng(seed)
    random = rng.integers(-n // 2, n // 2, size=(random_count, 3)) if random_count else np.empty((0, 3), dtype=np.int64)
    random = random[np.any(random != 0, axis=1)]
    return np.concatenate([np.array(lattice, dtype=np.int64).reshape(-1, 3), random])


def geometric_multiples(n: int) -> list[int]:
    """1, 2, 4, ... up to n/2: a cheaper offset set for repeated ledger use."""
    out, m = [], 1
    while m <= n // 2:
        out.append(m)
        m *= 2
    return out


def _wrapped_length(offset: Array, n: int, spacing: float) -> float:
    wrapped = (offset + n // 2) % n - n // 2
    return float(np.linalg.norm(wrapped)) * spacing


def _pointwise(values: Array, component_ndim: int) -> Array:
    if component_ndim == 0:
        return np.abs(values)
    flat = values.reshape((-1,) + values.shape[-3:])
    return np.sqrt(np.sum(np.abs(flat) ** 2, axis=0))


def holder_seminorm(
    field: PeriodicField,
    exponent: float,
    max_order: int = DEFAULT_MAX_ORDER,
    multiples: Optional[Sequence[int]] = None,
    random_count: int = RANDOM_OFFSETS,
    seed: int = 0,
    scale: float = 1.0,
) -> HolderEstimate:
    """Estimate [f]_exponent.

    Args:
        field: Field to measure
        exponent: m + α
        max_order: Largest derivative order the estimator accepts
        multiples: Offset multiples along lattice directions (default: all)
        random_count: Number of random displacements
        seed: Seed for the random displacements
        scale: Length unit; the result is multiplied by scale**exponent

    Raises:
        HolderOrderError: If exponent is negative or its integer part exceeds
            max_order
    """
    if exponent < 0:
        raise HolderOrderError(f"Hölder exponent must be nonnegative, got {exponent}")
    m, alpha = split_exponent(exponent)
    if m > max_order:
        raise HolderOrderError(
            f"exponent {exponent} needs {m} derivatives; estimator resolves at most {max_order}"
        )
    grid = field.grid
    cdim = len(field.rank.component_shape)
    derivs = [derivative(field, theta).values for theta in multi_indices(m)]

    if alpha == 0.0:
        value = max(float(np.max(_pointwise(d, cdim))) for d in derivs)
        offsets = np.empty((0, 3), dtype=np.int64)
    else:
        offsets = sampling_offsets(grid.n, multiples, random_count, seed)
        value = 0.0
        for offset in offsets:
            dist = _wrapped_length(offset, grid.n, grid.spacing)
            weight = dist**-alpha
            shift = tuple(int(s) for s in offset)
            for d in derivs:
                diff = d - np.roll(d, shift, axis=(-3, -2, -1))
                value = max(value, float(np.max(_pointwise(diff, cdim))) * weight)

    return HolderEstimate(
        exponent=float(exponent),
        value=value * scale**exponent,
        sampling_offsets=offsets,
        order=m,
        alpha=alpha,
        metadata={"scale": scale, "derivatives": len(derivs)},
    )


def holder_norm(
    field: PeriodicField,
    exponent: float,
    scale: float = 1.0,
    multiples: Optional[Sequence[int]] = None,
    random_count: int = RANDOM_OFFSETS,
) -> float:
    """‖f‖_{m+α} = Σ_{j≤m} [f]_j + [f]_{m+α}."""
    m, alpha = split_exponent(exponent)
    total = sum(holder_seminorm(field, float(j), scale=scale).value for j in range(m + 1))
    if alpha > 0.0:
        total += holder_seminorm(
            field, exponent, multiples=multiples, random_count=random_count, scale=scale
        ).value
    return float(total)


def ledger_norm(field: PeriodicField, exponent: float, scale: float = 1.0) -> float:
    """holder_norm with the cheaper geometric offset set."""
    return holder_norm(
        field, exponent, scale=scale, multiples=geometric_multiples(field.grid.n), random_count=16
    )


def ledger_seminorm(field: PeriodicField, exponent: float, scale: float = 1.0) -> float:
    """holder_seminorm value with the cheaper geometric offset set."""
    return holder_seminorm(
        field, exponent, multiples=geometric_multiples(field.grid.n), random_count=16, scale=scale
    ).value
