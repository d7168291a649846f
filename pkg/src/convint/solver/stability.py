#!/usr/bin/env python3
"""Estimate harness for the nonlocal transport–diffusion problem.

Each case is integrated with ``solve_advection_diffusion`` and both sides of
the maximum principle and of the stability estimates are evaluated with the
discrete norm estimators. Results are ledger lines; an estimate whose
precondition fails is skipped and listed, never raised.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.optimize import brentq

from ..errors import ParameterError
from ..ledger import Ledger
from ..logger import get_logger
from ..spectral.field import PeriodicField, Rank
from ..spectral.grid import Grid
from ..spectral.holder import ledger_norm, ledger_seminorm
from ..spectral.random_fields import random_band_limited
from .advection import Source, as_sampler, solve_advection_diffusion, velocity_sampler
from .fns import SolverConfig

logger = get_logger(__name__)

MAX_PRINCIPLE_SLACK = 1e-8
SUP_BOUND_SLACK = 1e-6
CONSTANT_CEILING = 1e6


@dataclass
class StabilityCase:
    """Inputs of one harness run."""

    name: str
    u0: PeriodicField
    velocity: Source
    nu: float
    gamma: float
    forcing: Optional[Source] = None
    alpha: float = 0.5
    order: int = 2
    t0: float = 0.0
    horizon: float = 0.5
    dt: float = 0.01
    samples: int = 11


@dataclass
class StabilityReport:
    name: str
    ledger: Ledger
    skipped: List[str] = field(default_factory=list)
    fits: Dict[str, float] = field(default_factory=dict)
    series: Dict[str, List[float]] = field(default_factory=dict)

    @property
    def violations(self) -> int:
        return len(self.ledger.failures())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "ledger": self.ledger.to_list(),
            "skipped": list(self.skipped),
            "fits": dict(self.fits),
        }


def _component_max(f: PeriodicField) -> np.ndarray:
    if f.rank is Rank.SCALAR:
        return np.array([np.max(f.values)])
    return np.max(f.values.reshape(f.values.shape[0], -1), axis=1)


def _gronwall_integral(times: np.ndarray, rate: float, values: np.ndarray) -> np.ndarray:
    """∫_{t0}^{t} e^{(t−s)·rate} g(s) ds at every sample t."""
    out = np.zeros(len(times))
    for k in range(1, len(times)):
        weights = np.exp((times[k] - times[: k + 1]) * rate)
        out[k] = trapezoid(weights * values[: k + 1], times[: k + 1])
    return out


def _worst(ledger: Ledger, identifier: str, lhs: np.ndarray, rhs: np.ndarray, desc: str, slack: float) -> None:
    k = int(np.argmax(lhs - rhs))
    ledger.check_le(identifier, lhs[k], rhs[k], desc, slack=slack)


def higher_order_constant(
    lhs: float, u0_n: float, u0_1: float, v_n: float, v_1: float, elapsed: float, forcing_terms: float
) -> float:
    """Smallest C ≥ 0 making the N-th order bound hold (forcing-free part solved exactly).

    The root is taken on the logarithm of the homogeneous part, which stays
    finite where e^{C(t−t0)[v]_1} overflows. Returns inf when no C up to
    CONSTANT_CEILING suffices.
    """
    target = lhs - forcing_terms
    if target <= 0.0 or u0_n >= target:
        return 0.0
    slope = elapsed * v_n * u0_1
    if u0_n <= 0.0 and slope <= 0.0:
        return math.inf

    def log_gap(c: float) -> float:
        return math.log(u0_n + c * slope) + c * elapsed * v_1 - math.log(target)

    lower = 0.0 if u0_n > 0.0 else 1e-300
    if log_gap(CONSTANT_CEILING) < 0.0:
        return math.inf
    return float(brentq(log_gap, lower, CONSTANT_CEILING))


def stability_harness(case: StabilityCase) -> StabilityReport:
    """Integrate one case and evaluate every estimate.

    Raises:
        ParameterError: If the case has no velocity
    """
    if case.velocity is None:
        raise ParameterError(f"stability case {case.name} needs a velocity")
    steps = max(1, int(math.ceil(case.horizon / case.dt - 1e-9)))
    save_every = max(1, steps // max(case.samples - 1, 1))
    config = SolverConfig(dt=case.dt, horizon=case.horizon, save_every=save_every)
    result = solve_advection_diffusion(
        case.u0, case.velocity, case.nu, case.gamma, config, case.forcing, t0=case.t0
    )
    u = result.v
    times = u.times
    elapsed = times - case.t0
    v_at = velocity_sampler(case.velocity)
    f_at = as_sampler(case.forcing)

    ledger = Ledger(stage=f"stability:{case.name}")
    report = StabilityReport(case.name, ledger)
    v1 = max(ledger_seminorm(v_at(float(t)), 1.0) for t in times)
    vn = max(ledger_seminorm(v_at(float(t)), float(case.order)) for t in times)
    v_1a = max(ledger_seminorm(v_at(float(t)), 1.0 + case.alpha) for t in times)

    def forcing_norms(fn: Any) -> np.ndarray:
        if f_at is None:
            return np.zeros(len(times))
        return np.array([fn(f_at(float(t))) for t in times])

    f_sup = forcing_norms(lambda f: f.sup_norm())
    f_1 = forcing_norms(lambda f: ledger_seminorm(f, 1.0))
    f_n = forcing_norms(lambda f: ledger_seminorm(f, float(case.order)))
    f_alpha = forcing_norms(lambda f: ledger_norm(f, case.alpha))
    f_1a = forcing_norms(lambda f: ledger_seminorm(f, 1.0 + case.alpha))

    u_sup = u.scalar(lambda f: f.sup_norm())
    u_1 = u.scalar(lambda f: ledger_seminorm(f, 1.0))
    report.series = {"t": times.tolist(), "sup": u_sup.tolist(), "gradient": u_1.tolist()}

    if f_at is None:
        overshoot = max(float(np.max(_component_max(f) - _component_max(case.u0))) for f in u)
        ledger.check_le(
            "transport.maximum_principle", overshoot, 0.0,
            "max u(t) <= max u0 without forcing", slack=MAX_PRINCIPLE_SLACK,
        )
    else:
        report.skipped.append("transport.maximum_principle")

    sup_rhs = u_sup[0] + cumulative_trapezoid(f_sup, times, initial=0.0)
    _worst(ledger, "transport.sup_bound", u_sup, sup_rhs,
           "||u(t)||_0 <= ||u0||_0 + int ||f||_0", SUP_BOUND_SLACK * max(u_sup[0], 1.0))

    grad_rhs = u_1[0] * np.exp(elapsed * v1) + _gronwall_integral(times, v1, f_1)
    _worst(ledger, "transport.gradient_bound", u_1, grad_rhs,
           "[u(t)]_1 <= [u0]_1 e^{(t-t0)[v]_1} + int e^{(t-s)[v]_1}[f]_1",
           SUP_BOUND_SLACK * max(u_1[0], 1.0))

    # higher order: fitted C
    u_n = u.scalar(lambda f: ledger_seminorm(f, float(case.order)))
    constants = []
    for k in range(1, len(times)):
        s = times[: k + 1]
        tail = trapezoid(np.exp((times[k] - s) * v1) * f_n[: k + 1], s)
        constants.append(
            higher_order_constant(u_n[k], u_n[0], u_1[0], vn, v1, float(elapsed[k]), float(tail))
        )
    fitted = max(constants) if constants else 0.0
    report.fits[f"stability_order_{case.order}_constant"] = fitted
    ledger.record(f"transport.order_{case.order}.constant", fitted,
                  "smallest C in the N-th order stability bound")

    admissible = elapsed * v1 <= 1.0 + 1e-12
    if np.count_nonzero(admissible) > 1:
        idx = np.nonzero(admissible)[0]
        u_alpha = np.array([ledger_norm(u[int(i)], case.alpha) for i in idx])
        alpha_rhs = math.exp(case.alpha) * (
            u_alpha[0] + cumulative_trapezoid(f_alpha[idx], times[idx], initial=0.0)
        )
        _worst(ledger, "transport.holder_alpha", u_alpha, alpha_rhs,
               "||u(t)||_alpha <= e^alpha (||u0||_alpha + int ||f||_alpha) for (t-t0)[v]_1 <= 1",
               SUP_BOUND_SLACK * max(u_alpha[0], 1.0))
        u_1a = np.array([ledger_seminorm(u[int(i)], 1.0 + case.alpha) for i in idx])
        t_idx = times[idx]
        rhs_1a = np.array(
            [
                u_1a[0]
                + (t - case.t0) * v_1a * u_1[0]
                + trapezoid(f_1a[idx][: j + 1] + (t - t_idx[: j + 1]) * v_1a * f_1[idx][: j + 1], t_idx[: j + 1])
                for j, t in enumerate(t_idx)
            ]
        )
        k = int(np.argmax(u_1a / np.maximum(rhs_1a, 1e-300)))
        ledger.check_lesssim("transport.holder_one_alpha", u_1a[k], rhs_1a[k],
                             "[u(t)]_{1+alpha} <~ [u0]_{1+alpha} + (t-t0)[v]_{1+alpha}[u0]_1 + ...")
    else:
        report.skipped.extend(["transport.holder_alpha", "transport.holder_one_alpha"])
        ledger.record("transport.holder_alpha.precondition", float(elapsed[-1] * v1),
                      "(t-t0)[v]_1 > 1: estimate skipped")

    logger.info(f"stability case {case.name}: {ledger.summary()}")
    return report


def shear_velocity(grid: Grid, amplitude: float = 1.0, mode: int = 1) -> PeriodicField:
    """(A sin(m x₂), 0, 0)."""
    return PeriodicField.from_function(
        grid, Rank.VECTOR, lambda x1, x2, x3: (amplitude * np.sin(mode * x2), 0.0, 0.0)
    )


def randomized_cases(
    grid: Grid,
    count: int,
    seed: int = 0,
    nu: float = 0.05,
    gamma: float = 0.2,
    horizon: float = 0.5,
    forced: bool = True,
) -> List[StabilityCase]:
    """Seeded cases with shear velocity scaled so that horizon·[v]_1 ≤ 1."""
    rng = np.random.default_rng(seed)
    cases = []
    for j in range(count):
        amplitude = float(rng.uniform(0.2, 1.0)) / horizon
        velocity = shear_velocity(grid, amplitude)
        u0 = random_band_limited(grid, Rank.SCALAR, rng, k_max=3)
        forcing = None
        if forced:
            forcing = random_band_limited(grid, Rank.SCALAR, rng, k_max=3) * float(rng.uniform(0.1, 1.0))
        cases.append(
            StabilityCase(
                f"random-{j}", u0, velocity, nu, gamma, forcing, horizon=horizon,
                dt=min(0.01, 0.4 * grid.spacing / amplitude),
            )
        )
    return cases


def constant_spread(reports: Sequence[StabilityReport], key: str) -> Dict[str, float]:
    """Range of a fitted constant across cases."""
    values = np.array([r.fits[key] for r in reports if key in r.fits and math.isfinite(r.fits[key])])
    if values.size == 0:
        return {"count": 0}
    return {
        "count": int(values.size),
        "min": float(values.min()),
        "max": float(values.max()),
        "mean": float(values.mean()),
    }
