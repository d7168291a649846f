"""Mikado flows: positive decomposition, pipe family, Fourier data and the constant M."""

from .decompose import DIRECTIONS, decompose_field, decompose_matrix, gamma_coefficients, reconstruct
from .family import MikadoFamily, build_family, mikado_identities
from .fourier import (
    MikadoFourier,
    compute_M,
    fourier_data,
    lattice_sum,
    lattice_tail,
    potential_coefficients,
    write_descriptor,
)

__all__ = [
    "DIRECTIONS",
    "MikadoFamily",
    "MikadoFourier",
    "build_family",
    "compute_M",
    "decompose_field",
    "decompose_matrix",
    "fourier_data",
    "gamma_coefficients",
    "lattice_sum",
    "lattice_tail",
    "mikado_identities",
    "potential_coefficients",
    "reconstruct",
    "write_descriptor",
]
