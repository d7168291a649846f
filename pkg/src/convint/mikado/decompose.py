#!/usr/bin/env python3
"""Positive decomposition R = Σ_j Γ_j(R)² k̂_j ⊗ k̂_j on the ball B̄_{1/2}(Id).

The weights are the maximum-entropy solution g_j = exp(k̂_j·Λk̂_j), where the
symmetric Λ solves Σ_j g_j k̂_j⊗k̂_j = R. Newton's method runs in the
six-dimensional space of symmetric matrices with the isometric coordinates
(R11, R22, R33, √2R12, √2R23, √2R13) and a backtracking line search. Every
weight is positive by construction and depends smoothly on R.

Every matrix of the closed ball is strictly diagonally dominant, which puts
it inside the cone spanned by the nine projectors below.
"""

import math
from typing import Optional

import numpy as np

from ..errors import DecompositionError, OutOfBallError
from ..logger import get_logger
from ..tolerances import get_tolerances

logger = get_logger(__name__)

DIRECTIONS = np.array(
    [
        [1, 0, 0],
        [0, 1, 0],
        [0, 0, 1],
        [1, 1, 0],
        [1, -1, 0],
        [0, 1, 1],
        [0, 1, -1],
        [1, 0, 1],
        [1, 0, -1],
    ],
    dtype=np.int64,
)
UNIT_DIRECTIONS = DIRECTIONS / np.linalg.norm(DIRECTIONS, axis=1)[:, None]
PROJECTORS = np.einsum("ji,jk->jik", UNIT_DIRECTIONS, UNIT_DIRECTIONS)

BALL_RADIUS = 0.5
MAX_ITERATIONS = 60
MAX_HALVINGS = 40

_ROOT2 = math.sqrt(2.0)


def vec6(matrix: np.ndarray) -> np.ndarray:
    """Isometric coordinates of symmetric matrices shaped (3, 3, ...) -> (6, ...)."""
    m = np.asarray(matrix, dtype=np.float64)
    return np.stack(
        [m[0, 0], m[1, 1], m[2, 2], _ROOT2 * m[0, 1], _ROOT2 * m[1, 2], _ROOT2 * m[0, 2]]
    )


def unvec6(vector: np.ndarray) -> np.ndarray:
    """Inverse of ``vec6``."""
    v = np.asarray(vector, dtype=np.float64)
    off = v[3:] / _ROOT2
    return np.stack(
        [
            np.stack([v[0], off[0], off[2]]),
            np.stack([off[0], v[1], off[1]]),
            np.stack([off[2], off[1], v[2]]),
        ]
    )


PROJECTOR_COORDS = np.stack([vec6(p) for p in PROJECTORS])  # (9, 6)


def ball_distance(matrix: np.ndarray) -> np.ndarray:
    """‖R − Id‖ in the Frobenius norm, for (3, 3, ...) arrays."""
    m = np.asarray(matrix, dtype=np.float64)
    eye = np.eye(3).reshape((3, 3) + (1,) * (m.ndim - 2))
    return np.sqrt(np.sum((m - eye) ** 2, axis=(0, 1)))


def _weights(lam: np.ndarray) -> np.ndarray:
    # lam: (6, N) dual variables in vec6 coordinates; g_j = exp(P_j : Λ)
    return np.exp(PROJECTOR_COORDS @ lam)


def _residual(lam: np.ndarray, target: np.ndarray) -> np.ndarray:
    return PROJECTOR_COORDS.T @ _weights(lam) - target


def decompose_field(matrices: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Weights g_j = Γ_j² for a (3, 3, ...) array of matrices; returns (9, ...).

    Raises:
        OutOfBallError: If a matrix lies outside B̄_{1/2}(Id)
        DecompositionError: If Newton's method fails to converge
    """
    tol = get_tolerances().newton if tol is None else tol
    m = np.asarray(matrices, dtype=np.float64)
    spatial = m.shape[2:]
    flat = m.reshape(3, 3, -1)
    if not np.allclose(flat, np.swapaxes(flat, 0, 1), atol=get_tolerances().symmetry):
        raise DecompositionError("matrices must be symmetric")
    distance = ball_distance(flat)
    worst = int(np.argmax(distance))
    if distance[worst] > get_tolerances().for_ball(BALL_RADIUS):
        raise OutOfBallError(
            f"matrix at flat index {worst} is {distance[worst]:.6f} from Id (> {BALL_RADIUS})"
        )

    target = vec6(flat)
    count = target.shape[1]
    lam = np.zeros((6, count))
    lam[:3] = math.log(1.0 / 3.0)
    residual = _residual(lam, target)
    norm = np.sqrt(np.sum(residual**2, axis=0))
    for _ in range(MAX_ITERATIONS):
        active = norm > tol
        if not np.any(active):
            break
        g = _weights(lam[:, active])
        jac = np.einsum("ja,jn,jb->nab", PROJECTOR_COORDS, g, PROJECTOR_COORDS)
        step = -np.linalg.solve(jac, residual[:, active].T[..., None])[..., 0].T
        scale = np.ones(step.shape[1])
        trial = lam[:, active] + step
        trial_norm = np.sqrt(np.sum(_residual(trial, target[:, active]) ** 2, axis=0))
        for _ in range(MAX_HALVINGS):
            worse = trial_norm >= norm[active]
            if not np.any(worse):
                break
            scale = np.where(worse, 0.5 * scale, scale)
            trial = lam[:, active] + scale * step
            trial_norm = np.sqrt(np.sum(_residual(trial, target[:, active]) ** 2, axis=0))
        lam[:, active] = trial
        residual[:, active] = _residual(trial, target[:, active])
        norm[active] = trial_norm
    if np.any(norm > tol):
        raise DecompositionError(
            f"decomposition did not converge (residual {float(norm.max()):.3e} > {tol:.1e})"
        )
    return _weights(lam).reshape((len(DIRECTIONS),) + spatial)


def decompose_matrix(matrix: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Γ_j(R)² for a single symmetric 3×3 matrix in B̄_{1/2}(Id)."""
    return decompose_field(np.asarray(matrix, dtype=np.float64).reshape(3, 3, 1), tol)[:, 0]


def gamma_coefficients(matrix: np.ndarray) -> np.ndarray:
    """Γ_j(R) = √(Γ_j²)."""
    return np.sqrt(decompose_matrix(matrix))


def reconstruct(weights: np.ndarray) -> np.ndarray:
    """Σ_j g_j k̂_j ⊗ k̂_j for weights shaped (9, ...)."""
    return np.einsum("j...,jab->ab...", np.asarray(weights), PROJECTORS)


def random_ball_matrices(rng: np.random.Generator, count: int, radius: float = BALL_RADIUS) -> np.ndarray:
    """Symmetric matrices uniform in direction, with ‖R − Id‖_F ≤ radius; shape (count, 3, 3)."""
    raw = rng.standard_normal((count, 6))
    raw /= np.linalg.norm(raw, axis=1)[:, None]
    raw *= radius * rng.uniform(0.0, 1.0, count)[:, None] ** (1.0 / 6.0)
    return np.stack([np.eye(3) + unvec6(r) for r in raw])
