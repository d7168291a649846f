#!/usr/bin/env python3
"""Property suites run by ``verify-operators``.

Every suite takes a grid and a seed and returns a ``Ledger``. Suites are
registered in registry.json and resolved through the stage manager.
"""

from typing import List

import numpy as np

from ..errors import ParameterError
from ..ledger import Ledger
from ..logger import get_logger
from ..mikado.decompose import random_ball_matrices
from ..mikado.family import build_family, mikado_identities
from ..mikado.fourier import fourier_data, orthogonality_defect
from ..operators.multipliers import (
    biot_savart,
    calderon_zygmund,
    fractional_laplacian,
    inverse_divergence,
)
from ..operators.phase import stationary_phase_probe
from ..solver.fns import SolverConfig, solve_fns
from ..solver.stability import constant_spread, randomized_cases, shear_velocity, stability_harness
from ..spectral.field import PeriodicField, Rank
from ..spectral.fitting import convergence_order, fit_power_law, fitted_constant
from ..spectral.grid import Grid
from ..spectral.holder import holder_norm, holder_seminorm
from ..spectral.mollifier import commutator_probe
from ..spectral.ops import curl, divergence
from ..spectral.random_fields import random_band_limited, random_divergence_free
from .audit import dissipation_audit

logger = get_logger(__name__)

HOLDER_FIELDS = 50
STABILITY_CASES = 20
UNFORCED_CASES = 5
MIKADO_MATRICES = 100


def _mode(grid: Grid, k: tuple[int, int, int]) -> PeriodicField:
    return PeriodicField.from_function(
        grid, Rank.SCALAR, lambda x1, x2, x3: np.cos(k[0] * x1 + k[1] * x2 + k[2] * x3)
    )


def operator_identities(grid: Grid, seed: int = 0) -> Ledger:
    """Single-mode symbols, div∘R, Biot–Savart and the fractional semigroup."""
    ledger = Ledger(stage="operator_identities")
    rng = np.random.default_rng(seed)
    gamma = 0.3

    worst = 0.0
    for k in ((1, 0, 0), (1, 2, 0), (2, 1, 3)):
        f = _mode(grid, k)
        expected = f * float(np.dot(k, k)) ** gamma
        worst = max(worst, (fractional_laplacian(f, gamma) - expected).sup_norm())
    ledger.check_le("operators.fractional_single_mode", worst, 1e-12, "(-Delta)^gamma e_k = |k|^(2 gamma) e_k", hard=True)

    f = random_band_limited(grid, Rank.VECTOR, rng)
    div_error = (divergence(inverse_divergence(f)) - f).sup_norm()
    ledger.check_le("operators.inverse_divergence", div_error, 1e-10, "div R f = f for mean-free f", hard=True)
    ledger.check_le("operators.inverse_divergence_trace", inverse_divergence(f).trace().sup_norm(), 1e-10,
                    "tr R f = 0", hard=True)

    v = random_divergence_free(grid, rng)
    z = biot_savart(v)
    ledger.check_le("operators.biot_savart_curl", (curl(z) - v).sup_norm(), 1e-10, "curl z = v", hard=True)
    ledger.check_le("operators.biot_savart_div", divergence(z).sup_norm(), 1e-10, "div z = 0", hard=True)

    g = random_band_limited(grid, Rank.SCALAR, rng)
    composed = fractional_laplacian(fractional_laplacian(g, 0.2), 0.3)
    semigroup = (composed - fractional_laplacian(g, 0.5)).sup_norm() / max(composed.sup_norm(), 1e-300)
    ledger.check_le("operators.semigroup", semigroup, 1e-12, "(-Delta)^a (-Delta)^b = (-Delta)^(a+b)", hard=True)
    return ledger


def mikado_suite(grid: Grid, seed: int = 0) -> Ledger:
    """Mikado identities over sampled R in the ball, orthogonality and coefficient decay.

    The family is built on its own quadrature grid; ``grid`` is unused.
    """
    ledger = Ledger(stage="mikado")
    family = build_family()
    matrices = random_ball_matrices(np.random.default_rng(seed), MIKADO_MATRICES)
    errors = {"mean": 0.0, "second_moment": 0.0, "divergence": 0.0, "flux_divergence": 0.0}
    for R in matrices:
        for key, value in mikado_identities(family, R).items():
            errors[key] = max(errors[key], value)
    ledger.check_le("mikado.mean", errors["mean"], 1e-8, "<W> = 0", hard=True)
    ledger.check_le("mikado.divergence", errors["divergence"], 1e-8, "div W = 0", hard=True)
    ledger.check_le("mikado.flux_divergence", errors["flux_divergence"], 1e-8, "div(W x W) = 0", hard=True)
    ledger.check_le("mikado.second_moment", errors["second_moment"], 1e-6, "<W x W> = R", hard=True)

    fourier = fourier_data(family, samples=MIKADO_MATRICES, seed=seed)
    orthogonality = orthogonality_defect(fourier, matrices[:10])
    ledger.check_le("mikado.orthogonality", orthogonality["a_k"], 1e-10, "a_k . k = 0", hard=True)
    decay = fourier.metadata["decay"]
    ledger.check_ge("mikado.decay_exponent", decay["exponent"], float(decay["gate"]), "|a_k| <= M_bar |k|^-4")
    ledger.record("mikado.M_bar", fourier.M_bar, "sup |a_k| |k|^4 over sampled R")
    return ledger


def local_solver_suite(grid: Grid, seed: int = 0) -> Ledger:
    """Shear decay, smooth energy identity and the RK order."""
    ledger = Ledger(stage="local_solver")
    nu, gamma = 0.1, 0.4

    u0 = shear_velocity(grid)
    result = solve_fns(u0, nu, gamma, SolverConfig(dt=0.05, horizon=1.0))
    t_end = float(result.v.times[-1])
    shear_error = (result.v[-1] - u0 * float(np.exp(-nu * t_end))).sup_norm()
    ledger.check_le("solver.shear_decay", shear_error, 1e-8, "shear decays like exp(-nu t)", hard=True)

    rng = np.random.default_rng(seed)
    u1 = random_divergence_free(grid, rng, k_max=2) * 0.2
    smooth = solve_fns(u1, nu, gamma, SolverConfig(dt=0.005, horizon=0.25))
    audit = dissipation_audit(smooth.v, nu, gamma)
    ledger.check_le("solver.energy_identity", audit.relative_variation, 1e-6,
                    "e_tot constant for smooth solutions")

    horizon = 0.2
    reference = solve_fns(u1, nu, gamma, SolverConfig(dt=horizon / 128, horizon=horizon)).v[-1]
    errors = [
        (solve_fns(u1, nu, gamma, SolverConfig(dt=horizon / steps, horizon=horizon)).v[-1] - reference).sup_norm()
        for steps in (4, 8, 16)
    ]
    order = convergence_order(errors)
    ledger.check_range("solver.rk_order", order, 3.7, 4.3, "integrating-factor RK4 order")
    return ledger


def transport_suite(grid: Grid, seed: int = 0) -> Ledger:
    """Maximum principle and stability estimates over randomized cases."""
    ledger = Ledger(stage="transport_estimates")
    cases = randomized_cases(grid, STABILITY_CASES, seed)
    cases += randomized_cases(grid, UNFORCED_CASES, seed + 1, forced=False)
    reports = [stability_harness(case) for case in cases]
    violations = sum(r.violations for r in reports)
    ledger.check_le("transport.violations", float(violations), 0.0,
                    f"violated estimates over {len(reports)} cases", hard=True)
    for line in (line for r in reports for line in r.ledger):
        if line.identifier == "transport.maximum_principle":
            ledger.extend([line])
    for key in sorted({k for r in reports for k in r.fits}):
        spread = constant_spread(reports, key)
        if spread.get("count"):
            ledger.record(f"transport.constant.{key}", spread["max"], f"largest fitted {key} over cases")
    return ledger


def _random_scalars(grid: Grid, seed: int, count: int) -> List[PeriodicField]:
    rng = np.random.default_rng(seed)
    return [random_band_limited(grid, Rank.SCALAR, rng, k_max=3) for _ in range(count)]


def holder_product_suite(grid: Grid, seed: int = 0) -> Ledger:
    """[fg]_r <= C([f]_r ||g||_0 + ||f||_0 [g]_r)."""
    ledger = Ledger(stage="holder_product")
    r = 0.5
    fields = _random_scalars(grid, seed, 2 * HOLDER_FIELDS)
    lhs, rhs = [], []
    for f, g in zip(fields[::2], fields[1::2]):
        fg = f.with_values(f.values * g.values)
        lhs.append(holder_seminorm(fg, r).value)
        rhs.append(holder_seminorm(f, r).value * g.sup_norm() + f.sup_norm() * holder_seminorm(g, r).value)
    ledger.check_le("holder.product", fitted_constant(lhs, rhs), 1.5, "fitted C in the product inequality")
    return ledger


def holder_interpolation_suite(grid: Grid, seed: int = 0) -> Ledger:
    """[f]_s <= C ||f||_0^(1-s/r) [f]_r^(s/r)."""
    ledger = Ledger(stage="holder_interpolation")
    s, r = 0.5, 1.0
    lhs, rhs = [], []
    for f in _random_scalars(grid, seed, HOLDER_FIELDS):
        lhs.append(holder_seminorm(f, s).value)
        rhs.append(f.sup_norm() ** (1.0 - s / r) * holder_seminorm(f, r).value ** (s / r))
    ledger.check_le("holder.interpolation", fitted_constant(lhs, rhs), 1.5, "fitted C in the interpolation inequality")
    return ledger


def commutator_suite(grid: Grid, seed: int = 0) -> Ledger:
    """‖(fψ)(gψ) − (fg)ψ‖₀ scales like ℓ²."""
    ledger = Ledger(stage="commutator")
    rng = np.random.default_rng(seed)
    f = random_band_limited(grid, Rank.SCALAR, rng, k_max=2)
    g = random_band_limited(grid, Rank.SCALAR, rng, k_max=2)
    ells = [0.8, 0.56, 0.4, 0.28]
    points = [p for p in commutator_probe(f, g, ells) if not p.under_resolved]
    fit = fit_power_law([p.ell for p in points], [p.norm for p in points])
    ledger.check_range("commutator.slope", fit.slope, 1.8, 2.2, "commutator ~ ell^2")
    return ledger


def fractional_holder_suite(grid: Grid, seed: int = 0) -> Ledger:
    """‖(−Δ)^γ f‖_α <~ ‖f‖_{α+2γ}."""
    ledger = Ledger(stage="fractional_holder")
    alpha, gamma = 0.3, 0.2
    lhs, rhs = [], []
    for f in _random_scalars(grid, seed, 10):
        lhs.append(holder_norm(fractional_laplacian(f, gamma), alpha))
        rhs.append(holder_norm(f, alpha + 2.0 * gamma))
    ledger.check_lesssim("fractional.holder", max(lhs), max(rhs), "||(-Delta)^gamma f||_alpha <~ ||f||_(alpha+2 gamma)")
    ledger.record("fractional.constant", fitted_constant(lhs, rhs), "fitted constant")
    return ledger


def calderon_zygmund_suite(grid: Grid, seed: int = 0) -> Ledger:
    """‖∂_i∂_jΔ⁻¹ f‖_α <~ ‖f‖_α."""
    ledger = Ledger(stage="calderon_zygmund")
    alpha = 0.3
    lhs, rhs = [], []
    for f in _random_scalars(grid, seed, 10):
        for i, j in ((0, 0), (0, 1), (1, 2)):
            lhs.append(holder_norm(calderon_zygmund(f, i, j), alpha))
            rhs.append(holder_norm(f, alpha))
    ledger.check_lesssim("calderon_zygmund.holder", max(lhs), max(rhs), "||d_i d_j Delta^-1 f||_alpha <~ ||f||_alpha")
    ledger.record("calderon_zygmund.constant", fitted_constant(lhs, rhs), "fitted constant")
    return ledger


def stationary_phase_suite(grid: Grid, seed: int = 0) -> Ledger:
    """Decay of ⨍ a e^{ik·Φ} and of ‖R(a e^{ik·Φ})‖_α for a smooth phase."""
    ledger = Ledger(stage="stationary_phase")
    a = PeriodicField.from_function(grid, Rank.SCALAR, lambda x1, x2, x3: 1.0 + 0.5 * np.cos(x1) * np.sin(x2))
    phase = PeriodicField.from_function(
        grid, Rank.VECTOR, lambda x1, x2, x3: (0.1 * np.sin(x2), 0.1 * np.sin(x3), 0.1 * np.sin(x1))
    )
    top = max(2, int(grid.n / (2 * 1.2 * np.sqrt(3.0))))
    k_list = [(k, k, k) for k in range(1, top + 1)]
    table = stationary_phase_probe(a, phase, k_list)
    try:
        exponent = -table.integral_decay().slope
    except ParameterError as e:
        logger.debug(f"integral decay fit skipped: {e}")
        exponent = float("inf")
    ledger.check_ge("stationary_phase.integral_decay", exponent, 3.0, "|<a e^(ik.Phi)>| <~ |k|^-m")
    ledger.record("stationary_phase.inverse_divergence", -table.inverse_divergence_decay().slope,
                  "decay exponent of ||R(a e^(ik.Phi))||_alpha")
    return ledger
