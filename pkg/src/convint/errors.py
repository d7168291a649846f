#!/usr/bin/env python3
"""Exception hierarchy for the convint package.

Hard aborts raise one of these; soft conditions are recorded in ledgers and
result metadata instead.
"""

from typing import Dict, Optional, Tuple


class ConvintError(RuntimeError):
    """Base class for every error raised by convint."""


class FieldShapeError(ConvintError):
    """Field values do not match the grid or rank they are declared with."""


class NonzeroMeanError(ConvintError):
    """An operator that needs mean-free input received a field with a mean."""


class HolderOrderError(ConvintError):
    """Requested Hölder exponent exceeds what the grid can resolve."""


class UnderResolvedError(ConvintError):
    """A scale or frequency falls outside the grid's resolution."""


class NyquistError(UnderResolvedError):
    """Oscillation frequency exceeds the dealiasing cutoff."""


class ParameterError(ConvintError):
    """Iteration parameters or configuration values are not admissible."""


class ScheduleOverflowError(ParameterError):
    """a^(b^q) overflows double precision."""

    def __init__(self, q: int, max_feasible_q: int) -> None:
        super().__init__(
            f"a^(b^q) overflows at q={q}; largest feasible level is {max_feasible_q}"
        )
        self.q = q
        self.max_feasible_q = max_feasible_q


class ProfileHypothesisError(ConvintError):
    """Energy profile violates one of its admissibility bounds."""

    def __init__(self, bound: str, detail: str) -> None:
        super().__init__(f"energy profile violates '{bound}': {detail}")
        self.bound = bound


class SamplingError(ConvintError):
    """Time sampling too coarse for the requested operation."""


class SolverError(ConvintError):
    """Base class for time-integration failures."""


class CFLViolation(SolverError):
    """Step size exceeds the advective CFL bound."""


class BlowUpError(SolverError):
    """Solution norm grew beyond the blow-up threshold."""

    def __init__(self, message: str, last_valid_time: float) -> None:
        super().__init__(f"{message} (last valid time {last_valid_time:.6g})")
        self.last_valid_time = last_valid_time


class HorizonError(SolverError):
    """Integration horizon exceeds the local existence bound."""


class IntervalSolveError(ConvintError):
    """The local solve launched at t_i failed on its window."""

    def __init__(self, index: int, cause: Exception) -> None:
        super().__init__(f"local solve for interval {index} failed: {cause}")
        self.index = index


class OutOfBallError(ConvintError):
    """A matrix left the closed ball of radius 1/2 around the identity."""


class StressRangeError(OutOfBallError):
    """Conjugated stress left the Mikado domain at some grid point."""

    def __init__(
        self,
        interval: int,
        time: float,
        location: Tuple[int, ...],
        distance: float,
    ) -> None:
        super().__init__(
            f"conjugated stress of interval {interval} at t={time:.6g}, "
            f"node {location} is {distance:.4f} from Id (limit 0.5)"
        )
        self.interval = interval
        self.time = time
        self.location = location
        self.distance = distance


class DecompositionError(ConvintError):
    """Matrix decomposition into Mikado directions did not converge."""


class PipeOverlapError(ConvintError):
    """Two Mikado pipes share grid points."""


class EnergyGapError(ConvintError):
    """Prescribed energy does not exceed the glued energy by enough to pump."""


class ResidualError(ConvintError):
    """Reynolds-system residual above tolerance."""

    def __init__(self, message: str, terms: Optional[Dict[str, float]] = None) -> None:
        detail = ""
        if terms:
            detail = "; " + ", ".join(f"{k}={v:.3e}" for k, v in terms.items())
        super().__init__(f"{message}{detail}")
        self.terms = dict(terms or {})


class CheckpointError(ConvintError):
    """A checkpoint file is missing or malformed."""


class StageError(ConvintError):
    """A pipeline stage aborted; wraps the underlying hard error."""

    def __init__(self, level: int, stage: str, cause: Exception) -> None:
        super().__init__(f"level {level}, stage '{stage}': {cause}")
        self.level = level
        self.stage = stage
        self.cause = cause

