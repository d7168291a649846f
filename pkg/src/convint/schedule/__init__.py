"""Iteration parameters, level schedule, energy profiles and starting triples."""

from .params import (
    TWO_PI,
    IterationParams,
    LevelValues,
    check_b_beta,
    delta,
    frequency,
    lambda_,
    level_values,
    max_feasible_level,
    schedule_ledger,
)
from .profile import (
    EnergyProfile,
    build_profile,
    check_hypotheses,
    denormalize_profile,
    dissipation_gate,
    normalization_ledger,
    normalize_profile,
)
from .seed import SeedTriple, seed_from_euler_field, zero_seed

__all__ = [
    "TWO_PI",
    "EnergyProfile",
    "IterationParams",
    "LevelValues",
    "SeedTriple",
    "build_profile",
    "check_b_beta",
    "check_hypotheses",
    "delta",
    "denormalize_profile",
    "dissipation_gate",
    "frequency",
    "lambda_",
    "level_values",
    "max_feasible_level",
    "normalization_ledger",
    "normalize_profile",
    "schedule_ledger",
    "seed_from_euler_field",
    "zero_seed",
]
