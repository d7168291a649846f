#!/usr/bin/env python3
"""Backward flow maps of the glued velocity, one per cutoff η_i."""

from typing import List, Optional

from tools.concurrency import WorkerPoolManager, get_pool_manager

from ..errors import ConvintError, IntervalSolveError
from ..gluing.glue import GluedState
from ..logger import get_logger
from ..solver.flow_map import FlowMap, flow_map
from ..solver.fns import SolverConfig
from .cutoffs import EtaCutoffs

logger = get_logger(__name__)

POOL = "flow_maps"


def build_flow_maps(
    glued: GluedState,
    eta: EtaCutoffs,
    config: Optional[SolverConfig] = None,
    pool: Optional[WorkerPoolManager] = None,
) -> List[FlowMap]:
    """Φ_i anchored at t_i = iτ, sampled at the run times inside supp η_i.

    Raises:
        IntervalSolveError: Naming the cutoff whose flow map failed
    """
    pool = pool or get_pool_manager()
    velocity = glued.triple.v
    partition = glued.partition

    def solve(i: int) -> FlowMap:
        start, stop = eta.support(i)
        try:
            flow = flow_map(velocity, partition.start(i), (start, stop), config)
        except ConvintError as exc:
            raise IntervalSolveError(i, exc) from exc
        flow.metadata["cutoff"] = i
        return flow

    flows = pool.map_ordered(POOL, solve, range(eta.count))
    logger.debug(f"{len(flows)} flow maps, max deviation {max(f.metadata['max_deviation'] for f in flows):.3e}")
    return flows
