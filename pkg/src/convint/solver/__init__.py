"""Local-in-time solvers: fractional Navier–Stokes, transport–diffusion and flow maps."""

from .advection import as_sampler, series_sampler, solve_advection_diffusion
from .flow_map import FlowMap, flow_map, lagrangian_displacement, transport_residual
from .fns import SolveResult, SolverConfig, fns_rate, horizon_ratio, solve_fns
from .stability import StabilityCase, StabilityReport, randomized_cases, stability_harness

__all__ = [
    "FlowMap",
    "SolveResult",
    "SolverConfig",
    "StabilityCase",
    "StabilityReport",
    "as_sampler",
    "flow_map",
    "fns_rate",
    "horizon_ratio",
    "lagrangian_displacement",
    "randomized_cases",
    "series_sampler",
    "solve_advection_diffusion",
    "solve_fns",
    "stability_harness",
    "transport_residual",
]
