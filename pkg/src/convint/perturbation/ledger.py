#!/usr/bin/env python3
"""Measured perturbation estimates and the inductive step ledger.

Norms are evaluated in source units, like the gluing ledger: λ_q is the
source frequency 2πn_q and Hölder seminorms of order r carry (2π)^r.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from ..ledger import Ledger, ledger_indices
from ..logger import get_logger
from ..schedule.params import TWO_PI, IterationParams, delta, level_values
from ..schedule.profile import EnergyProfile
from ..spectral.field import PeriodicField
from ..spectral.holder import ledger_norm
from ..spectral.ops import divergence
from ..state import ReynoldsTriple, field_digest
from ..tolerances import get_tolerances
from .assemble import AssembledStep
from .build import PerturbationBundle
from .pumping import PumpingState

logger = get_logger(__name__)


@dataclass
class StepReport:
    """Ledger of one convex-integration step plus its initial-data digests."""

    ledger: Ledger
    metadata: Dict[str, Any] = field(default_factory=dict)


def _scaled(f: PeriodicField, lam: float) -> float:
    """‖f‖₀ + λ⁻¹‖f‖₁ in source units."""
    return f.sup_norm() + ledger_norm(f, 1.0, scale=TWO_PI) / lam


def perturbation_ledger(
    bundle: PerturbationBundle,
    state: PumpingState,
    params: IterationParams,
    level: int,
    M_bar: float,
) -> Ledger:
    """Bounds on w_o, w_c and w_{q+1} and the structural checks of the build."""
    ledger = Ledger(level=level, stage="perturb")
    tol = get_tolerances()
    lv = level_values(params, level)
    nxt = level_values(params, level + 1)
    d_next = nxt.delta_q
    lam = nxt.lambda_q
    M = params.M
    picks = ledger_indices(len(bundle.times))

    principal = max(_scaled(bundle.w_o[i], lam) for i in picks)
    corrector = max(_scaled(bundle.w_c[i], lam) for i in picks)
    total = max(_scaled(bundle.w[i], lam) for i in picks)
    ledger.check_le("perturbation.principal", principal, 0.25 * M * np.sqrt(d_next),
                    "||w_o||_0 + ||w_o||_1 / lambda_{q+1} <= (M/4) delta_{q+1}^(1/2)")
    ledger.check_lesssim("perturbation.corrector", corrector, np.sqrt(d_next) / (lv.ell * lam),
                         "||w_c||_0 + ||w_c||_1 / lambda_{q+1} <~ delta_{q+1}^(1/2) / (ell lambda_{q+1})")
    ledger.check_le("perturbation.size", total, 0.5 * M * np.sqrt(d_next),
                    "||w_{q+1}||_0 + ||w_{q+1}||_1 / lambda_{q+1} <= (M/2) delta_{q+1}^(1/2)")

    div = max(divergence(w).sup_norm() for w in bundle.w)
    scale = max(1.0, bundle.frequency * max(w.sup_norm() for w in bundle.w))
    ledger.check_le("perturbation.divergence", div, tol.divergence * scale, "div w_{q+1} = 0", hard=True)
    mean = max(float(np.max(np.abs(w.mean()))) for w in bundle.w)
    ledger.check_le("perturbation.mean", mean, tol.mean_error, "<w_{q+1}> = 0", hard=True)

    meta = bundle.metadata
    ledger.check_le("perturbation.curl_identity", meta["identity_residual"], meta["det_defect"] + 1e-8,
                    "|w - (w_o + w_c)| <= |det grad Phi - 1| |w_o|")
    ledger.record("perturbation.det_defect", meta["det_defect"], "sup |det grad Phi - 1| |w_o|")
    if meta.get("coefficient_constant") is not None:
        ledger.check_le("perturbation.coefficients", meta["coefficient_constant"], M_bar,
                        "||b_{i,k}||_0 |k|^4 <= M_bar delta_{q+1}^(1/2)")
    ledger.record("perturbation.top_frequency", meta["top_frequency"],
                  "n_{q+1} k_max (1 + ||grad Phi - Id||_0), resolved by the grid")
    truncation = meta.get("truncation") or {}
    if truncation:
        ledger.check_le("perturbation.truncation.cross_direction", truncation["cross_direction"],
                        tol.truncation_moment, "max |<W_K (x) W_K> - R| over sampled R")
        ledger.check_le("perturbation.truncation.energy", truncation["energy"],
                        tol.truncation_moment, "max |<|W_K|^2> - tr R| over sampled R")
        ledger.check_ge("perturbation.truncation.retained_energy", truncation["retained_energy"],
                        tol.truncation_energy, "smallest fraction of a pipe's energy kept by the truncation")
        if truncation.get("k_max_for_energy") is not None:
            ledger.record("perturbation.truncation.k_max_for_energy", truncation["k_max_for_energy"],
                          "smallest k_max keeping the energy fraction")

    logger.info(f"level {level}: perturbation ledger {ledger.summary()}")
    return ledger


def step_ledger(
    previous: ReynoldsTriple,
    step: AssembledStep,
    glued: ReynoldsTriple,
    profile: EnergyProfile,
    params: IterationParams,
    level: int,
) -> StepReport:
    """Every inductive estimate at level q+1, plus the step bounds and residual oracles."""
    ledger = Ledger(level=level, stage="ledger")
    tol = get_tolerances()
    alpha = params.alpha
    M = params.M
    lv = level_values(params, level)
    nxt = level_values(params, level + 1)
    d_next2 = delta(params, level + 2)
    triple = step.triple
    times = triple.times
    picks = ledger_indices(len(times))
    target = np.asarray(profile(times / TWO_PI), dtype=np.float64)
    kinetic = triple.v.scalar(lambda f: f.mean_square())

    stress = max(f.sup_norm() for f in triple.R)
    ledger.check_le("step.stress_inductive", stress, d_next2 * nxt.lambda_q ** (-3.0 * alpha),
                    "||R_{q+1}||_0 <= delta_{q+2} lambda_{q+1}^(-3 alpha)")
    holder = max(ledger_norm(triple.R[i], alpha, scale=TWO_PI) for i in picks)
    ledger.check_lesssim(
        "step.stress_estimate", holder,
        np.sqrt(nxt.delta_q * lv.delta_q) * lv.lambda_q / nxt.lambda_q ** (1.0 - 4.0 * alpha),
        "||R_{q+1}||_alpha <~ delta_{q+1}^(1/2) delta_q^(1/2) lambda_q / lambda_{q+1}^(1-4 alpha)",
    )
    dissipative = max(f.sup_norm() for f in step.dissipative)
    ledger.check_lesssim(
        "step.dissipative_stress", dissipative,
        np.sqrt(nxt.delta_q) * nxt.lambda_q ** (params.gamma - 1.0 + alpha),
        "||R^D_{q+1}||_0 <~ delta_{q+1}^(1/2) lambda_{q+1}^(gamma - 1 + alpha)",
    )
    ledger.check_le("step.contraction", stress, max(f.sup_norm() for f in glued.R),
                    "||R_{q+1}||_0 < ||Rbar_q||_0 (trend)")

    c1 = max(ledger_norm(triple.v[i], 1.0, scale=TWO_PI) for i in picks)
    ledger.check_le("step.velocity_c1", c1, M * np.sqrt(nxt.delta_q) * nxt.lambda_q,
                    "||v_{q+1}||_1 <= M delta_{q+1}^(1/2) lambda_{q+1}")
    sup = max(f.sup_norm() for f in triple.v)
    ledger.check_le("step.velocity_sup", sup, 1.0 - np.sqrt(nxt.delta_q), "||v_{q+1}||_0 <= 1 - delta_{q+1}^(1/2)")
    difference = max(_scaled(triple.v[i] - previous.v[i], nxt.lambda_q) for i in picks)
    ledger.check_le("step.velocity_difference", difference, M * np.sqrt(nxt.delta_q),
                    "||v_{q+1} - v_q||_0 + ||v_{q+1} - v_q||_1 / lambda_{q+1} <= M delta_{q+1}^(1/2)")

    gap = target - kinetic
    ledger.check_ge("step.energy_window.lower", float(np.min(gap)), d_next2 * nxt.lambda_q ** (-alpha),
                    "e - <|v_{q+1}|^2> >= delta_{q+2} lambda_{q+1}^(-alpha)")
    ledger.check_le("step.energy_window.upper", float(np.max(gap)), d_next2, "e - <|v_{q+1}|^2> <= delta_{q+2}")
    design = 0.5 * nxt.lambda_q**alpha
    ledger.record("step.energy_window.design_ratio", design,
                  "(delta_{q+2}/2) / (delta_{q+2} lambda_{q+1}^(-alpha)); the lower window needs >= 1")
    if design < 1.0:
        logger.warning(
            f"level {level}: the pumped gap delta_(q+2)/2 lies below the lower energy window "
            f"(lambda_(q+1)^alpha = {nxt.lambda_q**alpha:.3f} < 2)"
        )
    tracking = float(np.max(np.abs(gap - 0.5 * d_next2)))
    ledger.check_lesssim(
        "step.energy_tracking", tracking,
        np.sqrt(lv.delta_q * nxt.delta_q) * lv.lambda_q ** (1.0 + 2.0 * alpha) / nxt.lambda_q,
        "|e - <|v_{q+1}|^2> - delta_{q+2}/2| <~ delta_q^(1/2) delta_{q+1}^(1/2) lambda_q^(1+2 alpha) / lambda_{q+1}",
    )
    glued_kinetic = glued.v.scalar(lambda f: f.mean_square())
    pumped = float(np.mean(kinetic - glued_kinetic > 0.0))
    ledger.record("step.pumping_direction", pumped, "fraction of times with <|v_{q+1}|^2> > <|vbar_q|^2>")

    div = max(triple.divergence_norm(i) for i in range(len(times)))
    ledger.check_le("step.divergence", div, tol.divergence * max(1.0, nxt.frequency * sup),
                    "div v_{q+1} = 0", hard=True)
    trace = max(triple.trace_norm(i) for i in range(len(times)))
    ledger.check_le("step.trace", trace, tol.for_trace(), "tr R_{q+1} = 0", hard=True)
    ledger.check_le("step.weak_residual", step.metadata["weak_residual"], tol.for_residual(),
                    "weak NSR residual of the new triple (relative)", hard=True)
    strong = max(triple.strong_residual(i)["relative"] for i in picks)
    ledger.record("step.strong_residual", strong, "pointwise NSR residual of the new triple (relative)")

    metadata = {
        "initial_digest": field_digest(triple.v[0]),
        "parent_initial_digest": field_digest(previous.v[0]),
        "initial_energy_target": float(target[0]),
        "contraction_ratio": stress / max(max(f.sup_norm() for f in glued.R), 1e-300),
    }
    logger.info(f"level {level}: step ledger {ledger.summary()}")
    return StepReport(ledger, metadata)


def initial_data_matches(first: StepReport, second: StepReport) -> Optional[bool]:
    """Whether two steps sharing v_q(·,0) and e(0) produced the same v_{q+1}(·,0); None if the premises differ."""
    a, b = first.metadata, second.metadata
    if a["parent_initial_digest"] != b["parent_initial_digest"]:
        return None
    if a["initial_energy_target"] != b["initial_energy_target"]:
        return None
    return bool(a["initial_digest"] == b["initial_digest"])
