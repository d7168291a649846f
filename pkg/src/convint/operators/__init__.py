"""Nonlocal operators on the torus as Fourier multipliers."""

from .multipliers import (
    BIOT_SAVART,
    INVERSE_DIVERGENCE,
    LERAY,
    FourierMultiplierOp,
    biot_savart,
    calderon_zygmund,
    fractional_energy,
    fractional_laplacian,
    inverse_divergence,
    leray_project,
    pressure_from_stress,
    pressure_from_velocity,
)
from .phase import PhaseDecayTable, PhaseSample, stationary_phase_probe

__all__ = [
    "BIOT_SAVART",
    "INVERSE_DIVERGENCE",
    "LERAY",
    "FourierMultiplierOp",
    "PhaseDecayTable",
    "PhaseSample",
    "biot_savart",
    "calderon_zygmund",
    "fractional_energy",
    "fractional_laplacian",
    "inverse_divergence",
    "leray_project",
    "pressure_from_stress",
    "pressure_from_velocity",
    "stationary_phase_probe",
]
