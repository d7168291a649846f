"""Time partition, cutoffs, mollification and gluing of local solutions."""

from .glue import GluedState, IntervalSolution, glue, solve_intervals
from .ledger import cfl_gate, gluing_estimate_ledger
from .mollification import MollifiedTriple, mollification_ledger, mollification_stage, mollify_triple
from .partition import ChiCutoffs, TimePartition, build_chi

__all__ = [
    "ChiCutoffs",
    "GluedState",
    "IntervalSolution",
    "MollifiedTriple",
    "TimePartition",
    "build_chi",
    "cfl_gate",
    "glue",
    "gluing_estimate_ledger",
    "mollification_ledger",
    "mollification_stage",
    "mollify_triple",
    "solve_intervals",
]
