"""Periodic fields on [0, 2π)³, spectral calculus and discrete norm estimators."""

from .field import Array, PeriodicField, Rank, forward, inverse
from .grid import Grid
from .holder import HolderEstimate, holder_norm, holder_seminorm, ledger_norm, ledger_seminorm
from .mollifier import CommutatorPoint, commutator_probe, mollify, mollify_time
from .ops import (
    curl,
    dealias,
    derivative,
    divergence,
    gradient,
    laplacian,
    outer,
    parseval_defect,
    roundtrip_error,
    strip_nyquist,
    to_modes,
    to_values,
    traceless_outer,
    traceless_part,
)

__all__ = [
    "Array",
    "CommutatorPoint",
    "Grid",
    "HolderEstimate",
    "PeriodicField",
    "Rank",
    "commutator_probe",
    "curl",
    "dealias",
    "derivative",
    "divergence",
    "forward",
    "gradient",
    "holder_norm",
    "holder_seminorm",
    "inverse",
    "laplacian",
    "ledger_norm",
    "ledger_seminorm",
    "mollify",
    "mollify_time",
    "outer",
    "parseval_defect",
    "roundtrip_error",
    "strip_nyquist",
    "to_modes",
    "to_values",
    "traceless_outer",
    "traceless_part",
]
