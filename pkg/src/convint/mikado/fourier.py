#!/usr/bin/env python3
"""Fourier data of the Mikado family and the constant M.

The pipe profiles are transformed once on the quadrature grid. Because W is
separable in R,

    a_k(R) = Σ_j Γ_j(R) φ̂_j(k) k̂_j,    C_k(R) = Σ_j Γ_j(R)² (φ_j²)^(k) k̂_j ⊗ k̂_j,

every coefficient is evaluated exactly from the weights of the decomposition.
φ̂_j(k) vanishes unless k·k_j = 0, which gives a_k·k = 0 and C_k k = 0.
"""

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import yaml

from ..errors import NyquistError, ParameterError
from ..logger import get_logger
from ..spectral.field import Array, forward
from ..spectral.fitting import fit_power_law
from ..spectral.grid import Grid
from ..tolerances import get_tolerances
from ..utils import plain_data
from .decompose import BALL_RADIUS, decompose_field, random_ball_matrices, unvec6
from .family import MikadoFamily

logger = get_logger(__name__)

DEFAULT_K_MAX = 16
DECAY_ORDER = 4
REPORTED_DECAY_ORDER = 6
R_SAMPLES = 100
R_SEED = 0
DERIVATIVE_STEP = 1e-4


def _index(k: np.ndarray, n: int) -> tuple:
    wrapped = np.mod(k, n)
    return (wrapped[:, 0], wrapped[:, 1], wrapped[:, 2])


def cube_wavevectors(k_max: int) -> np.ndarray:
    """All integer k with 0 < |k|_∞ ≤ k_max, as (K, 3)."""
    axis = range(-k_max, k_max + 1)
    cube = np.array(list(itertools.product(axis, axis, axis)), dtype=np.int64)
    return cube[np.any(cube != 0, axis=1)]


def sample_matrices(count: int = R_SAMPLES, seed: int = R_SEED, radius: float = BALL_RADIUS) -> np.ndarray:
    """Id followed by ``count`` seeded matrices of the ball; shape (count + 1, 3, 3)."""
    rng = np.random.default_rng(seed)
    return np.concatenate([np.eye(3)[None], random_ball_matrices(rng, count, radius)])


@dataclass
class MikadoFourier:
    """Pipe Fourier coefficients on the modes 0 < |k|_∞ ≤ k_max."""

    family: MikadoFamily
    k_max: int
    wavevectors: np.ndarray
    profile_modes: np.ndarray
    square_modes: np.ndarray
    tail_l1: np.ndarray
    M_bar: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.wavevectors, axis=1)

    def coefficients(self, gammas: Array) -> Array:
        """Σ_j γ_j φ̂_j(k) k̂_j for weights shaped (9, ...); returns (K, 3, ...)."""
        g = np.asarray(gammas, dtype=np.float64)
        return np.einsum("j...,jk,ja->ka...", g.astype(np.complex128), self.profile_modes, self.family.units)

    def a_k(self, R: Array) -> Array:
        """a_k(R) for every stored k, shape (K, 3)."""
        gammas = np.sqrt(decompose_field(np.asarray(R, dtype=np.float64).reshape(3, 3, 1)))[:, 0]
        return self.coefficients(gammas)

    def a_k_batch(self, matrices: Array) -> Array:
        """a_k for matrices shaped (S, 3, 3); returns (S, K, 3)."""
        stacked = np.moveaxis(np.asarray(matrices, dtype=np.float64), 0, -1)
        gammas = np.sqrt(decompose_field(stacked))
        return np.einsum("js,jk,ja->ska", gammas.astype(np.complex128), self.profile_modes, self.family.units)

    def C_k(self, R: Array) -> Array:
        """C_k(R) for every stored k, shape (K, 3, 3)."""
        weights = decompose_field(np.asarray(R, dtype=np.float64).reshape(3, 3, 1))[:, 0]
        units = self.family.units
        return np.einsum("j,jk,ja,jb->kab", weights.astype(np.complex128), self.square_modes, units, units)

    def reconstruct(self, R: Array, points: Array) -> Array:
        """Σ_k a_k(R) e^{ik·ξ} at points (3, ...)."""
        coefficients = self.a_k(R)
        pts = np.asarray(points, dtype=np.float64)
        phase = np.exp(1j * np.tensordot(self.wavevectors.astype(np.float64), pts, axes=(1, 0)))
        return np.real(np.tensordot(coefficients.T, phase, axes=(1, 0)))

    def tail_bound(self, R: Array) -> float:
        """Bound on |W(R, ·) − Σ_k a_k e^{ik·ξ}| at the quadrature nodes."""
        gammas = np.sqrt(decompose_field(np.asarray(R, dtype=np.float64).reshape(3, 3, 1)))[:, 0]
        return float(gammas @ self.tail_l1)

    def owned_modes(self, k_max: int) -> np.ndarray:
        """(9, K) mask of modes with |k|_∞ ≤ k_max orthogonal to exactly one pipe direction.

        A mode orthogonal to two directions appears in both profiles; only
        such shared modes carry products of different pipes into ⨍W⊗W.
        """
        aligned = (self.wavevectors @ self.family.directions.T == 0).T
        shared = np.count_nonzero(aligned, axis=0) > 1
        inside = np.max(np.abs(self.wavevectors), axis=1) <= k_max
        return aligned & ~shared[None] & inside[None]

    def truncated(self, k_max: int) -> "MikadoFourier":
        """The owned modes with |k|_∞ ≤ k_max, each profile renormalized to unit energy.

        Every kept mode belongs to one pipe, so the truncated series keeps
        ⨍W = 0, div W = 0 and ⨍W⊗W = R exactly.

        Raises:
            ParameterError: If k_max is not in [1, self.k_max] or leaves a pipe without modes
        """
        if not 1 <= k_max <= self.k_max:
            raise ParameterError(f"truncation order must lie in [1, {self.k_max}], got {k_max}")
        owned = self.owned_modes(k_max)
        kept = np.where(owned, self.profile_modes, 0.0)
        energy = np.sum(np.abs(kept) ** 2, axis=1)
        empty = [int(j) for j in np.nonzero(energy <= 0.0)[0]]
        if empty:
            raise ParameterError(f"truncation order {k_max} leaves pipes {empty} without modes of their own")
        renorm = 1.0 / np.sqrt(energy)
        dropped_l1 = np.sum(np.abs(np.where(owned, 0.0, self.profile_modes)), axis=1)
        rescaled_l1 = np.abs(renorm - 1.0) * np.sum(np.abs(kept), axis=1)
        columns = np.any(owned, axis=0)
        truncated = MikadoFourier(
            self.family,
            k_max,
            self.wavevectors[columns],
            (kept * renorm[:, None])[:, columns],
            np.where(owned, self.square_modes, 0.0)[:, columns],
            self.tail_l1 + dropped_l1 + rescaled_l1,
            self.M_bar,
            {
                "renormalization": renorm.tolist(),
                "retained_energy": energy.tolist(),
                "owned_modes": np.count_nonzero(owned, axis=1).tolist(),
                "parent_k_max": self.k_max,
                "k_max_for_energy": self.order_for_energy(get_tolerances().truncation_energy),
            },
        )
        truncated.metadata.update(truncation_defects(truncated))
        wanted = get_tolerances().truncation_energy
        if float(np.min(energy)) < wanted:
            needed = truncated.metadata["k_max_for_energy"]
            if needed:
                remedy = f"k_max={needed} would keep {wanted:.0e}"
            else:
                remedy = f"no k_max up to {self.k_max} keeps {wanted:.0e}"
            logger.warning(
                f"truncation at k_max={k_max} keeps {float(np.min(energy)):.2e} of a pipe's energy; {remedy}"
            )
        return truncated

    def order_for_energy(self, fraction: float) -> Optional[int]:
        """Smallest k_max whose owned modes keep ``fraction`` of every profile's energy; None if none does."""
        for k_max in range(1, self.k_max + 1):
            kept = np.where(self.owned_modes(k_max), self.profile_modes, 0.0)
            if float(np.min(np.sum(np.abs(kept) ** 2, axis=1))) >= fraction:
                return k_max
        return None

    def describe(self) -> Dict[str, Any]:
        return {
            "k_max": self.k_max,
            "modes": int(len(self.wavevectors)),
            "M_bar": self.M_bar,
            **self.metadata,
        }


def truncation_defects(fourier: MikadoFourier, samples: Optional[np.ndarray] = None) -> Dict[str, float]:
    """Second-moment and energy mismatch of the truncated series over sampled R.

    With every profile renormalized, ⨍ W_K ⊗ W_K − R collects only the
    products of different pipes that share a mode.
    """
    matrices = sample_matrices(count=20) if samples is None else samples
    coefficients = fourier.a_k_batch(matrices)
    moments = np.real(np.einsum("ska,skb->sab", coefficients, np.conj(coefficients)))
    mismatch = float(np.max(np.abs(moments - matrices)))
    energy = float(np.max(np.abs(np.trace(moments, axis1=1, axis2=2) - np.trace(matrices, axis1=1, axis2=2))))
    return {"cross_direction": mismatch, "energy": energy}


def fourier_data(
    family: MikadoFamily,
    k_max: int = DEFAULT_K_MAX,
    samples: int = R_SAMPLES,
    seed: int = R_SEED,
) -> MikadoFourier:
    """Transform the pipes on the quadrature grid and measure M̄.

    Raises:
        NyquistError: If k_max does not fit below the quadrature grid's Nyquist mode
    """
    grid = Grid(family.quadrature_n)
    if 2 * k_max >= grid.n:
        raise NyquistError(f"k_max={k_max} needs a quadrature grid finer than {grid.n}")

    wavevectors = cube_wavevectors(k_max)
    index = _index(wavevectors, grid.n)
    profile_modes = np.zeros((family.count, len(wavevectors)), dtype=np.complex128)
    square_modes = np.zeros_like(profile_modes)
    tail = np.zeros(family.count)
    for j in range(family.count):
        values = family.pipe_values(j, grid)
        modes = forward(values)
        squares = forward(values**2)
        aligned = wavevectors @ family.directions[j] == 0
        profile_modes[j] = np.where(aligned, modes[index], 0.0)
        square_modes[j] = np.where(aligned, squares[index], 0.0)
        tail[j] = float(np.sum(np.abs(modes)) - np.sum(np.abs(profile_modes[j])))
        logger.debug(f"pipe {j}: {int(aligned.sum())} aligned modes, mean mode {abs(modes[0, 0, 0]):.2e}")

    occupied = np.any(profile_modes != 0, axis=0) | np.any(square_modes != 0, axis=0)
    fourier = MikadoFourier(
        family, k_max, wavevectors[occupied], profile_modes[:, occupied], square_modes[:, occupied], tail
    )

    matrices = sample_matrices(samples, seed)
    amplitudes = np.linalg.norm(fourier.a_k_batch(matrices), axis=2)
    norms = fourier.norms
    fourier.M_bar = float(np.max(amplitudes * norms**DECAY_ORDER))
    fourier.metadata.update(
        {
            "samples": int(len(matrices)),
            "M_bar_6": float(np.max(amplitudes * norms**REPORTED_DECAY_ORDER)),
            "orthogonality": orthogonality_defect(fourier, matrices[:10]),
            "decay": decay_fit(norms, np.max(amplitudes, axis=0)),
            "derivative_constant": derivative_constant(fourier, matrices[:10]),
        }
    )
    logger.info(
        f"Mikado Fourier data: {len(fourier.wavevectors)} modes, M_bar={fourier.M_bar:.4e}, "
        f"decay exponent {fourier.metadata['decay']['exponent']:.2f}"
    )
    return fourier


def orthogonality_defect(fourier: MikadoFourier, matrices: np.ndarray) -> Dict[str, float]:
    """max |a_k·k| and max |C_k k| over the given matrices."""
    k = fourier.wavevectors.astype(np.float64)
    a_dot = 0.0
    c_dot = 0.0
    for R in matrices:
        a_dot = max(a_dot, float(np.max(np.abs(np.einsum("ka,ka->k", fourier.a_k(R), k)))))
        c_dot = max(c_dot, float(np.max(np.abs(np.einsum("kab,kb->ka", fourier.C_k(R), k)))))
    return {"a_k": a_dot, "C_k": c_dot}


def decay_fit(norms: np.ndarray, amplitudes: np.ndarray) -> Dict[str, Any]:
    """Power-law fit of the shell envelope max_{|k|≈s} |a_k|.

    A decay exponent below ``DECAY_ORDER`` is logged, never raised.
    """
    shells = np.rint(norms).astype(np.int64)
    radii: List[float] = []
    envelope: List[float] = []
    for s in range(1, int(shells.max()) + 1):
        members = amplitudes[shells == s]
        if members.size:
            radii.append(float(s))
            envelope.append(float(members.max()))
    floor = 1e-13 * max(envelope) if envelope else 0.0
    fit = fit_power_law(radii, envelope, floor=floor)
    exponent = -fit.slope
    passed = exponent >= DECAY_ORDER
    if not passed:
        logger.warning(
            f"Mikado coefficient envelope has fitted slope {fit.slope:.2f}, "
            f"slower than the |k|^-{DECAY_ORDER} decay; "
            "use a smoother pipe profile"
        )
    return {
        "exponent": exponent,
        "constant": fit.constant,
        "points": fit.points,
        "gate": DECAY_ORDER,
        "passed": bool(passed),
        "meets_reported_order": bool(exponent >= REPORTED_DECAY_ORDER),
    }


def derivative_constant(fourier: MikadoFourier, matrices: np.ndarray, step: float = DERIVATIVE_STEP) -> float:
    """sup |D_R a_k| |k|⁴ by central differences along random symmetric directions."""
    rng = np.random.default_rng(R_SEED + 1)
    norms = fourier.norms
    worst = 0.0
    for R in matrices:
        direction = unvec6(rng.standard_normal(6))
        direction /= np.linalg.norm(direction)
        distance = float(np.linalg.norm(R - np.eye(3)))
        centre = R if distance + step <= BALL_RADIUS else np.eye(3) + (R - np.eye(3)) * (BALL_RADIUS - 2 * step) / distance
        upper = fourier.a_k(centre + step * direction)
        lower = fourier.a_k(centre - step * direction)
        rate = np.linalg.norm(upper - lower, axis=1) / (2.0 * step)
        worst = max(worst, float(np.max(rate * norms**DECAY_ORDER)))
    return worst


def potential_coefficients(a_k: Array, k: Array) -> Array:
    """ik × a_k / |k|², whose plane wave has curl a_k e^{ik·ξ} when a_k·k = 0.

    Raises:
        ParameterError: For k = 0
    """
    kv = np.asarray(k, dtype=np.float64)
    k2 = np.sum(kv**2, axis=-1)
    if np.any(k2 == 0):
        raise ParameterError("the zero mode has no potential")
    return 1j * np.cross(kv, np.asarray(a_k)) / k2[..., None]


def lattice_sum(k_max: int) -> float:
    """Σ_{0<|k|_∞≤k_max} |k|^-4."""
    k = cube_wavevectors(k_max).astype(np.float64)
    return float(np.sum(np.sum(k**2, axis=1) ** -2))


def lattice_tail(k_max: int) -> float:
    """Integral bound on Σ_{|k|_∞>k_max} |k|^-4.

    Each unit cube around such a k lies outside the ball of radius
    k_max + 1/2, and |x| ≤ ρ|k| on it with ρ = 1 + √3/(2(k_max + 1)).
    """
    rho = 1.0 + math.sqrt(3.0) / (2.0 * (k_max + 1))
    return rho**4 * 4.0 * math.pi / (k_max + 0.5)


def compute_M(fourier: Union[MikadoFourier, float], k_max: Optional[int] = None) -> float:
    """M = 64 M̄ Σ_{k≠0} |k|^-4 with the lattice sum split at k_max plus its tail bound."""
    M_bar = fourier.M_bar if isinstance(fourier, MikadoFourier) else float(fourier)
    if k_max is None:
        k_max = fourier.k_max if isinstance(fourier, MikadoFourier) else DEFAULT_K_MAX
    return 64.0 * M_bar * (lattice_sum(k_max) + lattice_tail(k_max))


def write_descriptor(
    path: Union[str, Path],
    fourier: MikadoFourier,
    truncation: Optional[MikadoFourier] = None,
) -> Path:
    """Write the family descriptor (geometry, profile constants, M̄, M) as YAML."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    document: Dict[str, Any] = {
        "family": fourier.family.describe(),
        "fourier": fourier.describe(),
        "constants": {
            "M_bar": fourier.M_bar,
            "M": compute_M(fourier),
            "lattice_sum": lattice_sum(fourier.k_max),
            "lattice_tail": lattice_tail(fourier.k_max),
        },
    }
    if truncation is not None:
        document["truncation"] = truncation.describe()
    with open(target, "w", encoding="utf-8") as f:
        yaml.safe_dump(plain_data(document), f, sort_keys=False)
    logger.info(f"Mikado descriptor written to {target}")
    return target

