#!/usr/bin/env python3
"""Measured gluing estimates.

Norms are evaluated in source units: Hölder seminorms scale with 2π^r and
the Biot–Savart potential of a torus field is divided by 2π.
"""

from typing import Optional, Sequence

from ..ledger import Ledger, ledger_indices
from ..logger import get_logger
from ..operators.multipliers import biot_savart
from ..schedule.params import TWO_PI, IterationParams, level_values
from ..solver.advection import series_sampler
from ..spectral.field import PeriodicField
from ..spectral.holder import ledger_norm
from ..state import ReynoldsTriple, random_test_fields
from ..tolerances import get_tolerances
from .glue import GluedState

logger = get_logger(__name__)

CUTOFF_DERIVATIVE_CAP = 10.0


def cfl_gate(mollified: ReynoldsTriple, params: IterationParams, level: int, ledger: Ledger) -> None:
    """2τ_q‖v_ℓ‖_{1+α} ≲ ℓ^α, evaluated before any local solve."""
    lv = level_values(params, level)
    picks = ledger_indices(len(mollified.times))
    norm = max(ledger_norm(mollified.v[i], 1.0 + params.alpha, scale=TWO_PI) for i in picks)
    ledger.check_lesssim(
        "gluing.cfl", 2.0 * lv.tau_q * norm, lv.ell**params.alpha,
        "2 tau_q ||v_ell||_{1+alpha} <~ ell^alpha",
    )


def _holder(field: PeriodicField, alpha: float) -> float:
    return ledger_norm(field, alpha, scale=TWO_PI)


def gluing_estimate_ledger(
    glued: GluedState,
    params: IterationParams,
    level: int,
    tests: Optional[Sequence[PeriodicField]] = None,
) -> Ledger:
    """Both sides of every gluing estimate, plus the structural checks."""
    ledger = Ledger(level=level, stage="glue")
    tol = get_tolerances()
    lv = level_values(params, level)
    d_next = level_values(params, level + 1).delta_q
    alpha = params.alpha
    ell, tau = lv.ell, lv.tau_q
    triple = glued.triple
    v_ell = glued.mollified.v
    v_ell_at = series_sampler(v_ell)
    picks = ledger_indices(len(triple.times))

    cfl_gate(glued.mollified, params, level, ledger)

    cutoffs = glued.chi.verify()
    ledger.check_le("gluing.partition_of_unity", cutoffs["partition_of_unity"], 1e-12,
                    "sum_i chi_i = 1", hard=True)
    ledger.check_le("gluing.cutoff_one_on_J", cutoffs["one_on_J"], 1e-12, "chi_i = 1 on J_i", hard=True)
    ledger.check_le("gluing.cutoff_supports", cutoffs["separated_supports"], 0.0,
                    "supp chi_i and supp chi_{i+2} disjoint", hard=True)
    ledger.check_le("gluing.cutoff_derivative", cutoffs["derivative_constants"][1], CUTOFF_DERIVATIVE_CAP,
                    "tau_q ||d_t chi_i||_0 <= C")
    ledger.record("gluing.cutoff_second_derivative", cutoffs["derivative_constants"][2],
                  "tau_q^2 ||d_t^2 chi_i||_0")

    local = 0.0
    drift = 0.0
    for solution in glued.solutions:
        for j in ledger_indices(len(solution.v)):
            t = float(solution.v.times[j])
            reference = v_ell_at(t)
            local = max(local, _holder(solution.v[j] - reference, alpha))
            drift = max(drift, abs(solution.v[j].mean_square() - reference.mean_square()))
    ledger.check_lesssim("gluing.local_difference", local, tau * d_next * ell ** (alpha - 1.0),
                         "||v_i - v_ell||_alpha <~ tau_q delta_{q+1} ell^(alpha-1)")
    ledger.check_lesssim("gluing.local_energy_drift", drift, d_next * ell**alpha,
                         "|<|v_i|^2> - <|v_ell|^2>| <~ delta_{q+1} ell^alpha")

    potential = 0.0
    for i in glued.partition.transitions():
        shared = glued.shared_times(i)
        for j in ledger_indices(len(shared)):
            difference = glued.difference(i, shared[j])
            potential = max(potential, _holder(biot_savart(difference) * (1.0 / TWO_PI), alpha))
    ledger.check_lesssim("gluing.potential_difference", potential, tau * d_next * ell**alpha,
                         "||z_i - z_{i+1}||_alpha <~ tau_q delta_{q+1} ell^alpha")
    ledger.check_le("gluing.mean_free_difference", glued.metadata.get("difference_mean", 0.0),
                    tol.mean_error, "v_i - v_{i+1} is mean free", hard=True)

    velocity = max(_holder(triple.v[i] - v_ell[i], alpha) for i in picks)
    ledger.check_lesssim("gluing.velocity_difference", velocity, d_next**0.5 * ell**alpha,
                         "||vbar_q - v_ell||_alpha <~ delta_{q+1}^(1/2) ell^alpha")
    stress = max(_holder(triple.R[i], alpha) for i in picks)
    ledger.check_lesssim("gluing.stress", stress, d_next * ell**alpha,
                         "||Rbar_q||_alpha <~ delta_{q+1} ell^alpha")
    energy = max(abs(triple.v[i].mean_square() - v_ell[i].mean_square()) for i in range(len(triple.times)))
    ledger.check_lesssim("gluing.energy_difference", energy, d_next * ell**alpha,
                         "|<|vbar_q|^2> - <|v_ell|^2>| <~ delta_{q+1} ell^alpha")

    divergence = max(triple.divergence_norm(i) for i in range(len(triple.times)))
    ledger.check_le("gluing.divergence", divergence, tol.divergence * max(1.0, TWO_PI * velocity),
                    "div vbar_q = 0", hard=True)
    trace = max(triple.trace_norm(i) for i in range(len(triple.times)))
    ledger.check_le("gluing.trace", trace, tol.for_trace(), "tr Rbar_q = 0", hard=True)

    outside = [
        i for i, t in enumerate(triple.times) if glued.partition.locate(float(t))[0] == "J"
    ]
    support = max((triple.R[i].sup_norm() for i in outside), default=0.0)
    ledger.check_le("gluing.stress_support", support, tol.glued_support,
                    "Rbar_q vanishes on the J_i", hard=True)

    tests = list(tests) if tests is not None else random_test_fields(triple.grid)
    residual = max(triple.weak_residual(i, tests) for i in picks)
    ledger.check_le("gluing.weak_residual", residual, tol.for_residual(),
                    "weak NSR residual of the glued triple (relative)", hard=True)
    ledger.record("gluing.samples_per_tau", glued.metadata.get("samples_per_tau", 0.0),
                  "time samples per gluing interval")
    logger.info(f"level {level}: gluing ledger {ledger.summary()}")
    return ledger
