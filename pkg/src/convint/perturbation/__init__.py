"""Cutoffs, energy pumping, Mikado perturbation and assembly of the next triple."""

from .assemble import AssembledStep, assemble_next, euler_forcing, pumped_pressure
from .build import PerturbationBundle, build_perturbation, nyquist_guard, perturbation_sample
from .cutoffs import EtaCutoffs, build_eta
from .flows import build_flow_maps
from .ledger import StepReport, initial_data_matches, perturbation_ledger, step_ledger
from .pumping import PumpingState, pump

__all__ = [
    "AssembledStep",
    "EtaCutoffs",
    "PerturbationBundle",
    "PumpingState",
    "StepReport",
    "assemble_next",
    "build_eta",
    "build_flow_maps",
    "build_perturbation",
    "euler_forcing",
    "initial_data_matches",
    "nyquist_guard",
    "perturbation_ledger",
    "perturbation_sample",
    "pump",
    "pumped_pressure",
    "step_ledger",
]
