#!/usr/bin/env python3
"""Centralized numerical tolerances.

A single source of truth for every threshold the checks in convint compare
against. Each value can be overridden through an environment variable named
``CONVINT_TOL_<NAME>``.
"""

import os
from typing import Dict


def _env_float(name: str, default: str) -> float:
    return float(os.environ.get(f"CONVINT_TOL_{name}", default))


class Tolerances:
    """Numerical thresholds used by checks, solvers and ledgers."""

    def __init__(self) -> None:
        """Initialize thresholds from the environment with working defaults."""
        # Exact-class identities
        self.roundtrip = _env_float("ROUNDTRIP", "1e-12")
        self.parseval = _env_float("PARSEVAL", "1e-10")
        self.divergence = _env_float("DIVERGENCE", "1e-10")
        self.symmetry = _env_float("SYMMETRY", "1e-12")
        self.trace = _env_float("TRACE", "1e-8")
        self.mean_zero = _env_float("MEAN_ZERO", "1e-12")
        self.mean_error = _env_float("MEAN_ERROR", "1e-8")

        # Iterative solves
        self.newton = _env_float("NEWTON", "1e-13")
        self.decomposition = _env_float("DECOMPOSITION", "1e-10")
        self.ball_slack = _env_float("BALL_SLACK", "1e-12")

        # Time integration and residual oracles
        self.solver_divergence = _env_float("SOLVER_DIVERGENCE", "1e-10")
        self.residual_relative = _env_float("RESIDUAL_RELATIVE", "1e-4")
        self.glued_support = _env_float("GLUED_SUPPORT", "1e-6")
        self.transport_residual = _env_float("TRANSPORT_RESIDUAL", "1e-6")
        self.energy_slack = _env_float("ENERGY_SLACK", "1e-12")

        # Truncated Mikado series
        self.truncation_moment = _env_float("TRUNCATION_MOMENT", "1e-6")
        self.truncation_energy = _env_float("TRUNCATION_ENERGY", "1e-2")

        # Ledger
        self.implicit_constant_cap = _env_float("IMPLICIT_CONSTANT_CAP", "100")

    def for_identity(self) -> float:
        """Tolerance for exact operator identities (divergence, curl)."""
        return self.divergence

    def for_roundtrip(self) -> float:
        """Tolerance for transform round trips."""
        return self.roundtrip

    def for_residual(self) -> float:
        """Relative tolerance for Reynolds-system residuals."""
        return self.residual_relative

    def for_trace(self) -> float:
        """Tolerance on the trace of stress tensors."""
        return self.trace

    def for_ball(self, radius: float = 0.5) -> float:
        """Admissible Frobenius distance from the identity for Mikado inputs."""
        return radius + self.ball_slack

    def for_implicit_constant(self) -> float:
        """Largest fitted constant accepted for a '≲' ledger line."""
        return self.implicit_constant_cap

    def as_dict(self) -> Dict[str, float]:
        """Get all configured tolerances for logging and reports."""
        return {
            "roundtrip": self.roundtrip,
            "parseval": self.parseval,
            "divergence": self.divergence,
            "symmetry": self.symmetry,
            "trace": self.trace,
            "mean_zero": self.mean_zero,
            "mean_error": self.mean_error,
            "newton": self.newton,
            "decomposition": self.decomposition,
            "ball_slack": self.ball_slack,
            "solver_divergence": self.solver_divergence,
            "residual_relative": self.residual_relative,
            "glued_support": self.glued_support,
            "transport_residual": self.transport_residual,
            "energy_slack": self.energy_slack,
            "truncation_moment": self.truncation_moment,
            "truncation_energy": self.truncation_energy,
            "implicit_constant_cap": self.implicit_constant_cap,
        }

    def override(self, values: Dict[str, float]) -> None:
        """Apply overrides from a run configuration.

        Args:
            values: Mapping of tolerance name to new value

        Raises:
            KeyError: If a name is not a known tolerance
        """
        known = self.as_dict()
        for name, value in values.items():
            if name not in known:
                raise KeyError(f"Unknown tolerance '{name}'")
            setattr(self, name, float(value))


# Global instance - import this in other modules
TOLERANCES = Tolerances()


def get_tolerances() -> Tolerances:
    """Get the global tolerance instance."""
    return TOLERANCES
