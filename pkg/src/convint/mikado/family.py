#!/usr/bin/env python3
"""Mikado flows: stationary pressureless Euler flows made of disjoint pipes.

Pipe j runs along the lattice direction k_j through its anchor and carries
the velocity φ_j(dist) k̂_j, with

    φ_j(d) = c_j [ψ(d/r) − κ_j ψ(2d/r)]

where ψ is the mollifier bump. κ_j makes ⨍φ_j = 0 and c_j makes ⨍φ_j² = 1 on
the family's quadrature grid. Then W(R, ξ) = Σ_j Γ_j(R) φ_j(ξ) k̂_j has zero
mean, second moment R, and is divergence free with div(W⊗W) = 0 because the
pipes are disjoint and each profile is constant along its axis.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..errors import PipeOverlapError
from ..logger import get_logger
from ..spectral.field import Array, PeriodicField, Rank
from ..spectral.grid import Grid
from ..spectral.mollifier import bump
from ..spectral.ops import divergence, outer
from .decompose import DIRECTIONS, decompose_field, decompose_matrix

logger = get_logger(__name__)

TWO_PI = 2.0 * math.pi
LATTICE = 12
RADIUS_FRACTION = 0.49
QUADRATURE_N = 64

_SHIFTS = np.array(list(itertools.product((-1, 0, 1), repeat=3)), dtype=np.float64)
_WIDE_SHIFTS = np.array(list(itertools.product(range(-2, 3), repeat=3)), dtype=np.float64)


def _perpendicular(y: Array, unit: Array) -> Array:
    along = np.einsum("i,i...->...", unit, y)
    return y - unit.reshape((3,) + (1,) * (y.ndim - 1)) * along


def _wrap(y: Array) -> Array:
    return np.mod(y + math.pi, TWO_PI) - math.pi


def line_distance(points: Array, anchor: Array, direction: Array) -> Array:
    """Distance from points (3, ...) to the periodic line anchor + s·direction."""
    unit = np.asarray(direction, dtype=np.float64)
    unit = unit / np.linalg.norm(unit)
    y = _wrap(np.asarray(points, dtype=np.float64) - np.asarray(anchor).reshape((3,) + (1,) * (np.ndim(points) - 1)))
    best = None
    for shift in _SHIFTS:
        moved = y + TWO_PI * shift.reshape((3,) + (1,) * (y.ndim - 1))
        dist = np.sqrt(np.sum(_perpendicular(moved, unit) ** 2, axis=0))
        best = dist if best is None else np.minimum(best, dist)
    assert best is not None
    return best


def family_distance(anchor_a: Array, dir_a: Array, anchor_b: Array, dir_b: Array) -> Array:
    """Distance between two periodic lines; anchors may be batched as (..., 3)."""
    delta = np.asarray(anchor_b, dtype=np.float64) - np.asarray(anchor_a, dtype=np.float64)
    normal = np.cross(np.asarray(dir_a, dtype=np.int64), np.asarray(dir_b, dtype=np.int64))
    if not np.any(normal):
        unit = np.asarray(dir_a, dtype=np.float64) / np.linalg.norm(dir_a)
        shifted = delta[..., None, :] + TWO_PI * _WIDE_SHIFTS
        perp = shifted - (shifted @ unit)[..., None] * unit
        return np.min(np.linalg.norm(perp, axis=-1), axis=-1)
    g = math.gcd(*(abs(int(c)) for c in normal))
    period = TWO_PI * g
    s = delta @ normal.astype(np.float64)
    return np.abs(s - period * np.round(s / period)) / np.linalg.norm(normal)


def self_distance(direction: Array) -> float:
    """Smallest distance between distinct lattice copies of one line."""
    unit = np.asarray(direction, dtype=np.float64) / np.linalg.norm(direction)
    perp = TWO_PI * (_WIDE_SHIFTS - np.outer(_WIDE_SHIFTS @ unit, unit))
    lengths = np.linalg.norm(perp, axis=1)
    return float(np.min(lengths[lengths > 1e-9]))


@dataclass
class MikadoFamily:
    """Pipe directions, anchors, radius and profile constants."""

    directions: np.ndarray
    anchors: np.ndarray
    radius: float
    kappa: np.ndarray
    scale: np.ndarray
    quadrature_n: int = QUADRATURE_N
    metadata: Dict[str, Any] = field(default_factory=dict)
    _pipes: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def count(self) -> int:
        return len(self.directions)

    @property
    def units(self) -> np.ndarray:
        return self.directions / np.linalg.norm(self.directions, axis=1)[:, None]

    def distance(self, j: int, points: Array) -> Array:
        return line_distance(points, self.anchors[j], self.directions[j])

    def profile(self, j: int, d: Array) -> Array:
        """φ_j as a function of the distance to the axis."""
        return self.scale[j] * (bump(d / self.radius) - self.kappa[j] * bump(2.0 * d / self.radius))

    def pipe_values(self, j: int, grid: Grid) -> np.ndarray:
        """φ_j at the nodes of ``grid`` (cached per grid size)."""
        key = (j, grid.n)
        if key not in self._pipes:
            values = self.profile(j, self.distance(j, grid.full_mesh()))
            values.setflags(write=False)
            self._pipes[key] = values
        return self._pipes[key]

    def evaluate_at(self, R: Array, points: Array) -> Array:
        """W(R, ξ) at arbitrary points (3, ...)."""
        gammas = np.sqrt(decompose_matrix(R))
        out = np.zeros(np.shape(points), dtype=np.float64)
        for j in range(self.count):
            phi = self.profile(j, self.distance(j, points))
            out += gammas[j] * phi[None] * self.units[j].reshape((3,) + (1,) * (out.ndim - 1))
        return out

    def evaluate_W(self, R: Array, grid: Optional[Grid] = None) -> PeriodicField:
        """W(R, ·) on a grid (the quadrature grid by default)."""
        grid = grid or Grid(self.quadrature_n)
        gammas = np.sqrt(decompose_matrix(R))
        values = np.zeros((3,) + grid.shape)
        for j in range(self.count):
            values += gammas[j] * self.pipe_values(j, grid)[None] * self.units[j][:, None, None, None]
        return PeriodicField(grid, Rank.VECTOR, values, {"mikado_R": np.asarray(R).tolist()})

    def evaluate_field(self, R_values: Array, points: Array) -> Array:
        """W(R(x), ξ(x)) for a matrix field (3, 3, ...) and matching points (3, ...)."""
        gammas = np.sqrt(decompose_field(R_values))
        out = np.zeros(np.shape(points), dtype=np.float64)
        for j in range(self.count):
            phi = self.profile(j, self.distance(j, points))
            out += (gammas[j] * phi)[None] * self.units[j].reshape((3,) + (1,) * (out.ndim - 1))
        return out

    def check_overlap(self, grid: Optional[Grid] = None) -> int:
        """Number of nodes inside two pipes.

        Raises:
            PipeOverlapError: If any node belongs to two pipes
        """
        grid = grid or Grid(self.quadrature_n)
        mesh = grid.full_mesh()
        inside = np.stack([self.distance(j, mesh) < self.radius for j in range(self.count)])
        shared = int(np.count_nonzero(inside.sum(axis=0) > 1))
        if shared:
            raise PipeOverlapError(f"{shared} nodes lie in more than one pipe")
        return shared

    def describe(self) -> Dict[str, Any]:
        return {
            "directions": self.directions.tolist(),
            "anchors": self.anchors.tolist(),
            "radius": self.radius,
            "kappa": self.kappa.tolist(),
            "scale": self.scale.tolist(),
            "quadrature_n": self.quadrature_n,
            **self.metadata,
        }


def place_anchors(directions: np.ndarray, lattice: int = LATTICE) -> Tuple[np.ndarray, float]:
    """Greedy max–min placement of anchors on the (2π/lattice)·Z³ grid.

    Returns the anchors and the smallest distance between distinct lines.
    """
    ticks = TWO_PI * np.arange(lattice) / lattice
    candidates = np.stack(np.meshgrid(ticks, ticks, ticks, indexing="ij"), axis=-1).reshape(-1, 3)
    anchors: List[np.ndarray] = [candidates[0]]
    separation = math.inf
    for j in range(1, len(directions)):
        nearest = np.full(len(candidates), np.inf)
        for i, placed in enumerate(anchors):
            nearest = np.minimum(
                nearest, family_distance(placed, directions[i], candidates, directions[j])
            )
        best = int(np.argmax(nearest))
        anchors.append(candidates[best])
        separation = min(separation, float(nearest[best]))
    return np.stack(anchors), separation


def _normalize(directions: np.ndarray, anchors: np.ndarray, radius: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    mesh = Grid(n).full_mesh()
    kappa = np.zeros(len(directions))
    scale = np.zeros(len(directions))
    for j in range(len(directions)):
        d = line_distance(mesh, anchors[j], directions[j])
        outer_bump = bump(d / radius)
        inner_bump = bump(2.0 * d / radius)
        kappa[j] = outer_bump.mean() / inner_bump.mean()
        scale[j] = 1.0 / math.sqrt(float(np.mean((outer_bump - kappa[j] * inner_bump) ** 2)))
    return kappa, scale


def build_family(quadrature_n: int = QUADRATURE_N, lattice: int = LATTICE) -> MikadoFamily:
    """The nine-direction family with discretely normalized profiles.

    Raises:
        PipeOverlapError: If the placed pipes intersect on the quadrature grid
    """
    directions = DIRECTIONS.copy()
    anchors, separation = place_anchors(directions, lattice)
    spacing = min(separation, min(self_distance(d) for d in directions))
    radius = RADIUS_FRACTION * spacing
    kappa, scale = _normalize(directions, anchors, radius, quadrature_n)
    family = MikadoFamily(
        directions,
        anchors,
        radius,
        kappa,
        scale,
        quadrature_n,
        {"separation": separation, "lattice": lattice},
    )
    family.check_overlap()
    resolution = radius / (TWO_PI / quadrature_n)
    if resolution < 3.0:
        logger.warning(f"Mikado pipe radius spans only {resolution:.1f} quadrature cells")
    logger.info(f"Mikado family: {family.count} pipes, radius {radius:.4f}, separation {separation:.4f}")
    return family


def mikado_identities(family: MikadoFamily, R: Array) -> Dict[str, float]:
    """Quadrature errors of the Mikado identities at R on the family grid."""
    W = family.evaluate_W(R)
    flux = outer(W, W, dealiased=False)
    second = np.mean(flux.values.reshape(3, 3, -1), axis=-1)
    scale = max(W.sup_norm(), 1.0)
    return {
        "mean": float(np.max(np.abs(W.mean()))),
        "second_moment": float(np.max(np.abs(second - np.asarray(R)))),
        "divergence": divergence(W).sup_norm() / scale,
        "flux_divergence": divergence(flux).sup_norm() / scale**2,
    }

