#!/usr/bin/env python3
"""The six stages of one convex-integration step.

Each stage reads what earlier stages left on the ``LevelState`` and adds its
own output and ledger. Registry order: mollify → glue → pump → perturb →
assemble → ledger.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from ..base import BaseStage
from ..errors import ParameterError
from ..gluing import GluedState, MollifiedTriple, glue, gluing_estimate_ledger, mollification_stage
from ..ledger import Ledger, ledger_indices
from ..logger import get_logger
from ..mikado.fourier import MikadoFourier
from ..perturbation import (
    AssembledStep,
    EtaCutoffs,
    PerturbationBundle,
    PumpingState,
    StepReport,
    assemble_next,
    build_eta,
    build_flow_maps,
    build_perturbation,
    perturbation_ledger,
    pump,
    step_ledger,
)
from ..schedule.params import IterationParams
from ..schedule.profile import EnergyProfile
from ..solver.fns import SolverConfig
from ..spectral.field import PeriodicField
from ..state import ReynoldsTriple

logger = get_logger(__name__)


@dataclass
class LevelState:
    """Inputs and outputs of the step q → q+1."""

    level: int
    triple: ReynoldsTriple
    params: IterationParams
    profile: EnergyProfile
    solver: SolverConfig
    fourier: MikadoFourier
    truncated: MikadoFourier
    tests: List[PeriodicField]
    eta_fractions: Dict[str, float] = field(default_factory=dict)
    mollified: Optional[MollifiedTriple] = None
    glued: Optional[GluedState] = None
    eta: Optional[EtaCutoffs] = None
    pumping: Optional[PumpingState] = None
    bundle: Optional[PerturbationBundle] = None
    step: Optional[AssembledStep] = None
    report: Optional[StepReport] = None
    ledgers: Dict[str, Ledger] = field(default_factory=dict)

    def require(self, name: str) -> Any:  # type: ignore[ANN401]
        """An output of an earlier stage.

        Raises:
            ParameterError: If the stage producing it has not run
        """
        value = getattr(self, name)
        if value is None:
            raise ParameterError(f"level {self.level}: '{name}' is not available yet")
        return value

    @property
    def next_triple(self) -> ReynoldsTriple:
        return self.require("step").triple


class MollifyStage(BaseStage):
    """Spatial mollification at ℓ_q."""

    name = "mollify"

    def run(self, state: LevelState) -> LevelState:
        state.mollified = mollification_stage(state.triple, state.params, state.level)
        state.ledgers[self.name] = state.mollified.ledger
        return state


class GlueStage(BaseStage):
    """Local solves on every gluing interval and their glued triple."""

    name = "glue"

    def run(self, state: LevelState) -> LevelState:
        mollified = state.require("mollified")
        state.glued = glue(mollified.triple, state.params, state.level, state.solver, self.pool_manager)  # type: ignore[arg-type]
        state.ledgers[self.name] = gluing_estimate_ledger(state.glued, state.params, state.level, state.tests)
        return state


class PumpStage(BaseStage):
    """η cutoffs, flow maps, energy pumping and the ball check."""

    name = "pump"

    def run(self, state: LevelState) -> LevelState:
        glued = state.require("glued")
        state.eta = build_eta(glued.partition, state.eta_fractions or None)
        flows = build_flow_maps(glued, state.eta, state.solver, self.pool_manager)  # type: ignore[arg-type]
        state.pumping = pump(glued, state.profile, state.params, state.level, state.eta, flows)
        state.ledgers[self.name] = state.pumping.ledger
        return state


class PerturbStage(BaseStage):
    """w_{q+1} from the truncated Mikado coefficients."""

    name = "perturb"

    def run(self, state: LevelState) -> LevelState:
        pumping = state.require("pumping")
        checked = ledger_indices(len(pumping.times))
        state.bundle = build_perturbation(
            pumping, state.truncated, state.params, state.level, self.pool_manager, checked  # type: ignore[arg-type]
        )
        state.ledgers[self.name] = perturbation_ledger(
            state.bundle, pumping, state.params, state.level, state.fourier.M_bar
        )
        return state


class AssembleStage(BaseStage):
    """(v_{q+1}, p_{q+1}, R̊_{q+1})."""

    name = "assemble"

    def run(self, state: LevelState) -> LevelState:
        state.step = assemble_next(
            state.require("glued"),
            state.require("pumping"),
            state.require("bundle"),
            state.level,
            self.pool_manager,  # type: ignore[arg-type]
            state.tests,
        )
        return state


class LedgerStage(BaseStage):
    """Inductive estimates at level q+1."""

    name = "ledger"

    def run(self, state: LevelState) -> LevelState:
        glued = state.require("glued")
        state.report = step_ledger(
            state.triple, state.require("step"), glued.triple, state.profile, state.params, state.level
        )
        state.ledgers[self.name] = state.report.ledger
        return state
