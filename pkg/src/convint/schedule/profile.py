#!/usr/bin/env python3
"""Energy profiles e(t): sampled, cubic-interpolated, with a derivative bound K."""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from ..errors import ParameterError, ProfileHypothesisError
from ..ledger import Ledger
from ..logger import get_logger
from ..spectral.mollifier import smooth_step
from .params import IterationParams, delta

logger = get_logger(__name__)

DENSE_FACTOR = 16
PROFILE_SAMPLES = 257


@dataclass(frozen=True, eq=False)
class EnergyProfile:
    """Samples of e on a uniform time grid plus the bound K on |e'|."""

    times: np.ndarray
    values: np.ndarray
    K: float
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.times.ndim != 1 or self.times.shape != self.values.shape or len(self.times) < 4:
            raise ParameterError("profile needs at least four matching time/value samples")
        steps = np.diff(self.times)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ParameterError("profile samples must lie on a uniform increasing time grid")
        object.__setattr__(self, "_spline", CubicSpline(self.times, self.values))

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    def __call__(self, t: Any) -> Any:
        return self._spline(t)  # type: ignore[attr-defined]

    def derivative(self, t: Any) -> Any:
        return self._spline(t, 1)  # type: ignore[attr-defined]

    def _dense(self) -> np.ndarray:
        return np.linspace(self.start, self.end, DENSE_FACTOR * (len(self.times) - 1) + 1)

    def sup_derivative(self) -> float:
        """sup |e'| on the interpolant."""
        return float(np.max(np.abs(self.derivative(self._dense()))))

    def max_derivative(self) -> float:
        """sup e' (signed) on the interpolant."""
        return float(np.max(self.derivative(self._dense())))

    def bounds(self) -> tuple[float, float]:
        dense = self(self._dense())
        return float(np.min(dense)), float(np.max(dense))

    def scaled(self, time_factor: float, value_factor: float, **meta: Any) -> "EnergyProfile":
        """t ↦ value_factor · e(time_factor · t) on the mapped grid."""
        merged: Dict[str, Any] = dict(self.metadata)
        merged.update(meta)
        return EnergyProfile(
            self.times / time_factor,
            self.values * value_factor,
            self.K * value_factor * time_factor,
            merged,
        )

    def to_dict(self) -> Dict[str, Any]:
        lo, hi = self.bounds()
        return {
            "start": self.start,
            "end": self.end,
            "samples": len(self.times),
            "K": self.K,
            "min": lo,
            "max": hi,
            "sup_derivative": self.sup_derivative(),
            **dict(self.metadata),
        }


def check_hypotheses(profile: EnergyProfile) -> None:
    """1/2 ≤ e ≤ 1 and sup|e'| ≤ K.

    Raises:
        ProfileHypothesisError: Naming the first violated bound
    """
    lo, hi = profile.bounds()
    if lo < 0.5 - 1e-12:
        raise ProfileHypothesisError("lower_bound", f"min e = {lo:.6g} < 1/2")
    if hi > 1.0 + 1e-12:
        raise ProfileHypothesisError("upper_bound", f"max e = {hi:.6g} > 1")
    slope = profile.sup_derivative()
    if slope > profile.K * (1.0 + 1e-9):
        raise ProfileHypothesisError("derivative_bound", f"sup|e'| = {slope:.6g} > K = {profile.K}")


def normalize_profile(profile: EnergyProfile, params: IterationParams) -> tuple[EnergyProfile, float]:
    """ẽ(t) = μ² e(μ t) with μ = δ₁^{1/2}.

    Returns the rescaled profile and μ; the rescaled viscosity equals μ.
    """
    check_hypotheses(profile)
    mu = math.sqrt(delta(params, 1))
    rescaled = profile.scaled(mu, mu**2, normalized=True, mu=mu)
    logger.info(f"profile normalized with mu={mu:.6g}: range {rescaled.bounds()}")
    return rescaled, mu


def denormalize_profile(profile: EnergyProfile, mu: float) -> EnergyProfile:
    """Inverse of ``normalize_profile``: e(t) = μ^{-2} ẽ(t/μ)."""
    return profile.scaled(1.0 / mu, mu**-2, normalized=False)


def normalization_ledger(rescaled: EnergyProfile, original_K: float, params: IterationParams) -> Ledger:
    """Bounds of the rescaled profile."""
    d1 = delta(params, 1)
    ledger = Ledger(stage="profile")
    lo, hi = rescaled.bounds()
    ledger.check_ge("profile.normalized_lower", lo, d1 / 2.0, "inf e >= delta_1 / 2")
    ledger.check_le("profile.normalized_upper", hi, d1, "sup e <= delta_1")
    ledger.check_le(
        "profile.normalized_slope",
        rescaled.max_derivative(),
        d1**1.5 * original_K,
        "sup e' <= delta_1^(3/2) K",
    )
    ledger.check_le("profile.normalized_unit_slope", rescaled.max_derivative(), 1.0, "sup e' <= 1")
    return ledger


def dissipation_gate(K: float, constant: float = 1.0) -> Dict[str, Any]:
    """K − 1 > C K^{8/9}, with the largest C for which it passes."""
    lhs = K - 1.0
    rhs = constant * K ** (8.0 / 9.0)
    return {
        "K": K,
        "constant": constant,
        "lhs": lhs,
        "rhs": rhs,
        "passed": bool(lhs > rhs),
        "max_passing_constant": lhs / K ** (8.0 / 9.0) if K > 0.0 else None,
    }


# factories ---------------------------------------------------------------


def _uniform(horizon: float, samples: int) -> np.ndarray:
    return np.linspace(0.0, horizon, samples)


def constant_profile(value: float, horizon: float = 1.0, samples: int = PROFILE_SAMPLES) -> EnergyProfile:
    t = _uniform(horizon, samples)
    return EnergyProfile(t, np.full_like(t, value), 0.0, {"kind": "constant", "value": value})


def cosine_profile(horizon: float = 1.0, K: float = 1.0, samples: int = PROFILE_SAMPLES) -> EnergyProfile:
    """e(t) = 3/4 + cos(t)/4."""
    t = _uniform(horizon, samples)
    return EnergyProfile(t, 0.75 + 0.25 * np.cos(t), K, {"kind": "cosine"})


def decreasing_profile(
    K: float, horizon: float = 1.0, samples: int = 4 * PROFILE_SAMPLES
) -> EnergyProfile:
    """e(0) = 1, e' = −(2K − 2) on [0, 1/(4K)], then a smooth stop staying above 1/2.

    The returned derivative bound is the C¹ bound 2K + 2; ``metadata["dissipation_K"]``
    keeps K for the dissipation gate.
    """
    if K <= 1.0:
        raise ParameterError(f"decreasing profile needs K > 1, got {K}")
    t = _uniform(horizon, samples)
    t1 = 1.0 / (4.0 * K)
    width = 1.0 / (4.0 * K * (2.0 * K - 2.0))
    slope = -(2.0 * K - 2.0) * (1.0 - smooth_step((t - t1) / width))
    values = 1.0 + cumulative_trapezoid(slope, t, initial=0.0)
    return EnergyProfile(
        t, values, 2.0 * K + 2.0, {"kind": "decreasing", "dissipation_K": K}
    )


def sampled_profile(
    times: Sequence[float], values: Sequence[float], K: Optional[float] = None
) -> EnergyProfile:
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if K is None:
        K = float(np.max(np.abs(np.gradient(v, t))))
    return EnergyProfile(t, v, K, {"kind": "samples"})


def build_profile(spec: Mapping[str, Any]) -> EnergyProfile:
    """Build a profile from a config mapping with a ``kind`` key."""
    kind = spec.get("kind", "constant")
    horizon = float(spec.get("horizon", 1.0))
    if kind == "constant":
        return constant_profile(float(spec.get("value", 1.0)), horizon)
    if kind == "cosine":
        return cosine_profile(horizon, float(spec.get("K", 1.0)))
    if kind == "decreasing":
        return decreasing_profile(float(spec.get("K", 2.0)), horizon)
    if kind == "samples":
        return sampled_profile(spec["times"], spec["values"], spec.get("K"))
    raise ParameterError(f"unknown profile kind '{kind}'")
