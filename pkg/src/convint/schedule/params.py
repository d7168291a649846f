#!/usr/bin/env python3
"""Iteration parameters and the per-level schedule (λ_q, δ_q, ℓ, τ_q).

Values are given in source units, where the torus has period 1 and λ_q
carries the factor 2π. The solver runs on [0, 2π)³; ``LevelValues`` exposes the
converted lengths and times (``*_torus``) next to the source ones.
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from ..errors import ParameterError, ScheduleOverflowError
from ..ledger import Ledger
from ..logger import get_logger

logger = get_logger(__name__)

TWO_PI = 2.0 * math.pi
# a^(b^q) must stay an exactly representable integer
MAX_FREQUENCY = 2.0**52


@dataclass(frozen=True)
class IterationParams:
    """Parameters (a, b, β, α, γ, ν, M) of the iteration."""

    a: float = 4.0
    b: float = 1.25
    beta: float = 0.25
    alpha: float = 0.01
    gamma: float = 0.2
    nu: Optional[float] = None
    M: float = 1.0
    allow_gamma_above_beta: bool = False

    def __post_init__(self) -> None:
        checks = [
            (self.a > 1.0, f"a must exceed 1, got {self.a}"),
            (self.b > 1.0, f"b must exceed 1, got {self.b}"),
            (0.0 < self.beta < 1.0 / 3.0, f"beta must lie in (0, 1/3), got {self.beta}"),
            (0.0 < self.alpha < 1.0, f"alpha must lie in (0, 1), got {self.alpha}"),
            (0.0 < self.gamma < 1.0 / 3.0, f"gamma must lie in (0, 1/3), got {self.gamma}"),
            (self.M > 0.0, f"M must be positive, got {self.M}"),
        ]
        if self.nu is not None:
            checks.append((0.0 < self.nu <= 1.0, f"nu must lie in (0, 1], got {self.nu}"))
        for ok, message in checks:
            if not ok:
                raise ParameterError(message)
        if self.gamma >= self.beta and not self.allow_gamma_above_beta:
            logger.warning(
                f"gamma={self.gamma} >= beta={self.beta}: the dissipation gate cannot "
                "produce Leray-Hopf solutions"
            )

    @property
    def viscosity(self) -> float:
        """ν, defaulting to the rescaled value δ₁^{1/2}."""
        return self.nu if self.nu is not None else math.sqrt(delta(self, 1))

    @property
    def viscosity_torus(self) -> float:
        """ν(2π)^{2γ−1}, the coefficient of (−Δ)^γ on [0, 2π)³."""
        return self.viscosity * TWO_PI ** (2.0 * self.gamma - 1.0)

    def with_M(self, M: float) -> "IterationParams":
        values = asdict(self)
        values["M"] = float(M)
        return IterationParams(**values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class LevelValues:
    """Schedule values at level q."""

    q: int
    frequency: int
    lambda_q: float
    delta_q: float
    ell: float
    tau_q: float

    @property
    def ell_torus(self) -> float:
        return TWO_PI * self.ell

    @property
    def tau_torus(self) -> float:
        return TWO_PI * self.tau_q

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values["ell_torus"] = self.ell_torus
        values["tau_torus"] = self.tau_torus
        return values


def max_feasible_level(params: IterationParams) -> int:
    """Largest q with a^(b^q) below the exact-integer limit."""
    q = 0
    while params.b ** (q + 1) * math.log(params.a) <= math.log(MAX_FREQUENCY):
        q += 1
    return q


def frequency(params: IterationParams, q: int) -> int:
    """⌈a^(b^q)⌉.

    Raises:
        ScheduleOverflowError: If a^(b^q) exceeds the exact-integer limit
    """
    if q < 0:
        raise ParameterError(f"level must be nonnegative, got {q}")
    exponent = params.b**q * math.log(params.a)
    if exponent > math.log(MAX_FREQUENCY):
        raise ScheduleOverflowError(q, max_feasible_level(params))
    return int(math.ceil(math.exp(exponent) - 1e-9))


def lambda_(params: IterationParams, q: int) -> float:
    return TWO_PI * frequency(params, q)


def delta(params: IterationParams, q: int) -> float:
    return lambda_(params, q) ** (-2.0 * params.beta)


def level_values(params: IterationParams, q: int) -> LevelValues:
    """λ_q = 2π⌈a^(b^q)⌉, δ_q = λ_q^{−2β}, ℓ and τ_q."""
    lam = lambda_(params, q)
    d_q = delta(params, q)
    d_next = delta(params, q + 1)
    ell = math.sqrt(d_next) / (math.sqrt(d_q) * lam ** (1.0 + 1.5 * params.alpha))
    tau = ell ** (2.0 * params.alpha) / (math.sqrt(d_q) * lam)
    values = LevelValues(q, frequency(params, q), lam, d_q, ell, tau)
    logger.debug(f"level {q}: {values.to_dict()}")
    return values


def check_b_beta(params: IterationParams) -> tuple[bool, float]:
    """Strict 1 < b < min{(1−β)/(2β), 4/3}; margin is the distance to the nearest bound."""
    upper = min((1.0 - params.beta) / (2.0 * params.beta), 4.0 / 3.0)
    margin = min(params.b - 1.0, upper - params.b)
    return bool(1.0 < params.b < upper), float(margin)


def schedule_ledger(params: IterationParams, q: int) -> Ledger:
    """Evaluate every admissibility predicate of level q as ledger lines."""
    ledger = Ledger(level=q, stage="schedule")
    lv = level_values(params, q)
    nxt = level_values(params, q + 1)
    d_next2 = delta(params, q + 2)

    _, margin = check_b_beta(params)
    ledger.check_ge(
        "schedule.b_beta", margin, math.ulp(1.0), "1 < b < min{(1-beta)/(2 beta), 4/3} (strict)"
    )

    ledger.check_range(
        "schedule.frequency_ratio",
        lv.lambda_q / params.a ** (params.b**q),
        TWO_PI,
        2.0 * TWO_PI,
        "2pi <= lambda_q / a^(b^q) <= 4pi",
    )
    ratio = (lv.delta_q / nxt.delta_q) ** 1.5
    ledger.check_le(
        "schedule.size_ratio.lower",
        lv.lambda_q ** (3.0 * params.alpha),
        ratio,
        "lambda_q^(3 alpha) <= (delta_q / delta_{q+1})^(3/2)",
    )
    ledger.check_le(
        "schedule.size_ratio.upper",
        ratio,
        nxt.lambda_q / lv.lambda_q,
        "(delta_q / delta_{q+1})^(3/2) <= lambda_{q+1} / lambda_q",
    )
    ledger.check_range(
        "schedule.ell",
        lv.ell,
        lv.lambda_q**-1.5,
        1.0 / lv.lambda_q,
        "lambda_q^(-3/2) <= ell <= lambda_q^(-1)",
    )
    ledger.check_ge(
        "schedule.delta_product",
        nxt.delta_q * math.sqrt(lv.delta_q) * lv.lambda_q,
        1.0,
        "delta_{q+1} delta_q^(1/2) lambda_q >= 1",
    )
    ledger.record("schedule.lambda", lv.lambda_q, "lambda_q")
    ledger.record("schedule.delta", lv.delta_q, "delta_q")
    ledger.record("schedule.delta_next", nxt.delta_q, "delta_{q+1}")
    ledger.record("schedule.delta_next2", d_next2, "delta_{q+2}")
    ledger.record("schedule.ell_value", lv.ell, "ell")
    ledger.record("schedule.tau", lv.tau_q, "tau_q")
    return ledger
