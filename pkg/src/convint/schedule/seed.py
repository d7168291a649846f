#!/usr/bin/env python3
"""Starting triples for the iteration.

The zero seed is (0, 0, 0). The mollified Euler seed takes a sampled Euler
solution v (torus units), mollifies it in space and time at scale δ_n and
returns (v_n, p_n, R̊_n) with

    R̊_n = v_n ⊗̊ v_n − (v ⊗̊ v)_n + ν_n R(−Δ)^γ v_n,

together with the energy profile e_n(t) = ⨍|v_n|² + δ_{n+1} λ_n^{−α}.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..errors import ParameterError
from ..ledger import Ledger
from ..logger import get_logger
from ..operators.multipliers import fractional_laplacian, inverse_divergence, pressure_from_velocity
from ..spectral.field import PeriodicField, Rank
from ..spectral.fitting import fit_power_law
from ..spectral.grid import Grid
from ..spectral.holder import ledger_norm, ledger_seminorm
from ..spectral.mollifier import mollify, mollify_time
from ..spectral.ops import divergence, traceless_outer
from ..state import ReynoldsTriple, TimeSeries, zero_triple
from ..tolerances import get_tolerances
from .params import TWO_PI, IterationParams, delta, lambda_
from .profile import EnergyProfile, sampled_profile

logger = get_logger(__name__)

PROVENANCE = ("zero_seed", "mollified_euler_seed")


@dataclass
class SeedTriple:
    """A starting triple with its provenance and (for Euler seeds) its energy profile."""

    triple: ReynoldsTriple
    provenance: str
    level: int = 0
    profile: Optional[EnergyProfile] = None
    ledger: Ledger = field(default_factory=Ledger)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCE:
            raise ParameterError(f"unknown seed provenance '{self.provenance}'")

    def describe(self) -> Dict[str, Any]:
        return {
            "provenance": self.provenance,
            "level": self.level,
            "samples": len(self.triple.times),
            **self.metadata,
        }


def zero_seed(grid: Grid, times: Sequence[float], params: IterationParams) -> SeedTriple:
    """(v₀, p₀, R̊₀) = (0, 0, 0) on the time grid."""
    triple = zero_triple(grid, times, params.viscosity_torus, params.gamma)
    return SeedTriple(triple, "zero_seed", 0)


def mollification_scale(params: IterationParams, n: int) -> float:
    """δ_n = a^{−b^{n+2}} (source units)."""
    return float(params.a ** (-(params.b ** (n + 2))))


def seed_viscosity(params: IterationParams, n: int, beta_prime: float) -> float:
    """ν_n = δ_n^{1+β'} (source units)."""
    return mollification_scale(params, n) ** (1.0 + beta_prime)


def _stack(series: TimeSeries) -> np.ndarray:
    return np.stack([f.values for f in series])


def _from_stack(grid: Grid, rank: Rank, times: np.ndarray, stack: np.ndarray, name: str) -> TimeSeries:
    fields = [PeriodicField(grid, rank, np.ascontiguousarray(stack[j])) for j in range(len(times))]
    return TimeSeries(times, fields, name=name)


def seed_from_euler_field(
    v: TimeSeries,
    params: IterationParams,
    n: int,
    beta_prime: Optional[float] = None,
) -> SeedTriple:
    """Mollified Euler seed at level n.

    ``v`` is sampled on a uniform torus time grid. An identically zero input
    degenerates to the zero seed.

    Raises:
        ParameterError: If a sample is not divergence-free or β' ≤ β
        SamplingError: If the time step is too coarse for time mollification
    """
    beta_prime = (params.beta + 1.0 / 3.0) / 2.0 if beta_prime is None else beta_prime
    if not params.beta < beta_prime < 1.0:
        raise ParameterError(f"seed needs beta < beta' < 1, got beta'={beta_prime}")
    grid = v.grid
    times = v.times
    tol = get_tolerances().solver_divergence
    for j, sample in enumerate(v):
        div = divergence(sample).sup_norm()
        if div > tol * max(1.0, ledger_seminorm(sample, 1.0)):
            raise ParameterError(f"Euler sample {j} is not divergence-free (|div v| = {div:.3e})")

    if all(sample.sup_norm() == 0.0 for sample in v):
        logger.info("Euler seed input vanishes identically; using the zero seed")
        seed = zero_seed(grid, times, params)
        seed.metadata["degenerate_euler_input"] = True
        return seed

    d_n = mollification_scale(params, n)
    nu_n = seed_viscosity(params, n, beta_prime)
    nu_torus = nu_n * TWO_PI ** (2.0 * params.gamma - 1.0)
    scale = TWO_PI * d_n
    dt = v.dt

    v_space = _stack(v.map(lambda f: mollify(f, scale)))
    flux_space = _stack(v.map(lambda f: mollify(traceless_outer(f), scale)))
    v_n = _from_stack(grid, Rank.VECTOR, times, mollify_time(v_space, dt, scale), "v")
    flux_n = _from_stack(grid, Rank.SYMTENSOR, times, mollify_time(flux_space, dt, scale), "flux")

    def stress(index: int) -> PeriodicField:
        vn = v_n[index]
        dissipative = inverse_divergence(fractional_laplacian(vn, params.gamma)) * nu_torus
        return traceless_outer(vn) - flux_n[index] + dissipative

    R_n = TimeSeries.lazy(times, stress, "R")
    p_n = TimeSeries.lazy(times, lambda i: pressure_from_velocity(v_n[i], R_n[i]), "p")
    triple = ReynoldsTriple(
        v=v_n,
        p=p_n,
        R=R_n,
        nu=nu_torus,
        gamma=params.gamma,
        level=n,
        metadata={"seed": "mollified_euler_seed", "nu_n": nu_n, "delta_n": d_n},
    )

    floor = delta(params, n + 1) * lambda_(params, n) ** (-params.alpha)
    energies = np.array([f.mean_square() for f in v_n]) + floor
    profile = sampled_profile(times / TWO_PI, energies)

    ledger = seed_ledger(triple, params, n, beta_prime, scale)
    logger.info(f"Euler seed at level {n}: delta_n={d_n:.4g}, nu_n={nu_n:.4g}, {ledger.summary()}")
    return SeedTriple(
        triple,
        "mollified_euler_seed",
        n,
        profile,
        ledger,
        {"delta_n": d_n, "nu_n": nu_n, "beta_prime": beta_prime, "energy_floor": floor},
    )


def seed_ledger(
    triple: ReynoldsTriple, params: IterationParams, n: int, beta_prime: float, scale: float
) -> Ledger:
    """Size of the seed stress and gradient, plus the level-n inductive bounds."""
    ledger = Ledger(level=n, stage="seed")
    d_n = triple.metadata["delta_n"]
    nu_n = triple.metadata["nu_n"]
    r_sup = max(R.sup_norm() for R in triple.R)
    grad = max(ledger_norm(f, 1.0, scale=TWO_PI) for f in triple.v)
    ledger.check_lesssim(
        "seed.stress_size", r_sup, d_n ** (2.0 * beta_prime) + nu_n * grad,
        "||R_n||_0 <~ delta_n^(2 beta') + nu_n [v_n]_1",
    )
    ledger.check_lesssim(
        "seed.gradient", grad, d_n ** (beta_prime - 1.0), "||v_n||_1 <~ delta_n^(beta' - 1)"
    )
    ledger.check_le(
        "seed.inductive_stress", r_sup,
        delta(params, n + 1) * lambda_(params, n) ** (-3.0 * params.alpha),
        "||R_n||_0 <= delta_{n+1} lambda_n^(-3 alpha)",
    )
    horizon = float(triple.times[-1] - triple.times[0])
    local = horizon * max(ledger_norm(f, 1.0 + params.alpha) for f in triple.v)
    ledger.record("seed.local_euler", local, "horizon ||v_n||_{1+alpha} (torus units)")
    ledger.record("seed.time_scale", scale, "mollification scale (torus units)")
    return ledger


def stress_trend(params: IterationParams, v: TimeSeries, levels: Sequence[int], beta_prime: float) -> Dict[str, Any]:
    """‖R̊_n‖₀ against δ_n over several levels, with the fitted log-log slope."""
    scales, norms = [], []
    for n in levels:
        seed = seed_from_euler_field(v, params, n, beta_prime)
        scales.append(mollification_scale(params, n))
        norms.append(max(R.sup_norm() for R in seed.triple.R))
    fit = fit_power_law(scales, norms)
    return {
        "levels": list(levels),
        "delta_n": scales,
        "stress": norms,
        "slope": fit.slope,
        "expected_slope": 2.0 * beta_prime,
        "trend_ok": bool(all(a >= b for a, b in zip(norms, norms[1:]))),
        "ratio": [b / a for a, b in zip(norms, norms[1:]) if a > 0],
    }
