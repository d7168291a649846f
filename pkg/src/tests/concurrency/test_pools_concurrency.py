"""Worker pools: ordering, error propagation, slot accounting and pool-size independence of results."""

import json
import random
import threading
import time

import numpy as np
import pytest

from convint.gluing.glue import glue
from convint.schedule.params import IterationParams
from convint.solver.fns import SolverConfig
from convint.solver.stability import shear_velocity
from convint.spectral.field import PeriodicField, Rank
from convint.spectral.grid import Grid
from convint.state import ReynoldsTriple, TimeSeries
from tools.concurrency import WorkerPoolManager, get_pool_manager


def drifting_shear(grid: Grid, times) -> ReynoldsTriple:
    first = shear_velocity(grid, 0.4, mode=1)
    second = PeriodicField.from_function(grid, Rank.VECTOR, lambda x, y, z: (0.3 * np.cos(2 * z), 0.0, 0.0))
    n = len(times)
    return ReynoldsTriple(
        v=TimeSeries(times, [first * (1.0 + t) + second * (1.0 - 0.5 * t) for t in times], name="v"),
        p=TimeSeries(times, [PeriodicField.zeros(grid)] * n, name="p"),
        R=TimeSeries(times, [PeriodicField.zeros(grid, Rank.SYMTENSOR)] * n, name="R"),
        nu=0.05,
        gamma=0.2,
    )


class TestMapOrdered:
    def test_results_keep_input_order(self):
        pools = WorkerPoolManager(overrides={"interval_solves": {"max": 4}})
        delays = random.Random(7).sample(range(20), 12)

        def work(i):
            time.sleep(delays[i] / 1000.0)
            return i * i

        assert pools.map_ordered("interval_solves", work, range(12)) == [i * i for i in range(12)]
        pools.shutdown()

    def test_runs_concurrently_up_to_pool_size(self):
        pools = WorkerPoolManager(overrides={"flow_maps": {"max": 3}})
        lock = threading.Lock()
        active = [0]
        peak = [0]

        def work(_):
            with lock:
                active[0] += 1
                peak[0] = max(peak[0], active[0])
            time.sleep(0.02)
            with lock:
                active[0] -= 1

        pools.map_ordered("flow_maps", work, range(9))
        pools.shutdown()
        assert 1 <= peak[0] <= 3

    def test_single_slot_runs_inline(self):
        pools = WorkerPoolManager(overrides={"perturbation": {"max": 1}})
        caller = threading.get_ident()
        idents = pools.map_ordered("perturbation", lambda _: threading.get_ident(), range(4))
        assert set(idents) == {caller}

    def test_empty_input(self):
        assert WorkerPoolManager().map_ordered("interval_solves", lambda x: x, []) == []

    def test_first_error_raised_after_all_tasks_finish(self):
        pools = WorkerPoolManager()
        finished = []
        lock = threading.Lock()

        def work(i):
            if i == 2:
                raise ValueError("interval 2")
            time.sleep(0.01)
            with lock:
                finished.append(i)
            return i

        with pytest.raises(ValueError, match="interval 2"):
            pools.map_ordered("interval_solves", work, range(6))
        pools.shutdown()
        assert sorted(finished) == [0, 1, 3, 4, 5]


class TestSlots:
    def test_unknown_pool_yields_false(self):
        pools = WorkerPoolManager()
        assert not pools.can_acquire_resource("nope")
        with pools.acquire_resource("nope") as ok:
            assert ok is False
        assert pools.pool_size("nope") == 1

    def test_slot_accounting(self):
        pools = WorkerPoolManager(overrides={"perturbation": {"max": 1}})
        with pools.acquire_resource("perturbation", {"time": 0.1}) as ok:
            assert ok
            status = pools.get_status()["pools"]["perturbation"]
            assert status["current"] == 1
            assert status["available"] == 0
            assert not pools.can_acquire_resource("perturbation")
            with pools.acquire_resource("perturbation", timeout=0) as second:
                assert second is False
        assert pools.can_acquire_resource("perturbation")
        assert pools.get_status()["pools"]["perturbation"]["current"] == 0

    def test_status_totals(self):
        status = WorkerPoolManager().get_status()
        assert set(status["pools"]) == {"interval_solves", "flow_maps", "perturbation"}
        assert status["total"]["max"] == sum(p["max"] for p in status["pools"].values())
        assert status["total"]["current"] == 0


class TestConfiguration:
    def test_packaged_defaults(self):
        pools = WorkerPoolManager()
        assert pools.pool_size("interval_solves") == 4
        assert pools.pool_size("flow_maps") == 4
        assert pools.pool_size("perturbation") == 2

    def test_config_file(self, tmp_path):
        path = tmp_path / "pools.json"
        path.write_text(json.dumps({"resource_pools": {"interval_solves": {"max": 7, "timeout": 5}}}))
        pools = WorkerPoolManager(str(path))
        assert pools.pool_size("interval_solves") == 7
        assert pools.pool_size("flow_maps") == 1

    def test_overrides_add_pools(self):
        pools = WorkerPoolManager(overrides={"spectral": {"max": 3}, "ignored": 5})
        assert pools.pool_size("spectral") == 3
        assert "ignored" not in pools.get_resource_pools_for_testing()
        assert pools.get_status()["pools"]["spectral"]["timeout"] == 180

    def test_singleton_applies_later_overrides(self):
        first = get_pool_manager()
        second = get_pool_manager(overrides={"flow_maps": {"max": 2}})
        assert first is second
        assert first.pool_size("flow_maps") == 2


@pytest.mark.slow
class TestPoolSizeIndependence:
    def test_glue_is_identical_for_any_pool_size(self):
        grid = Grid(16)
        triple = drifting_shear(grid, np.linspace(0.0, 1.5, 31))
        solver = SolverConfig(dt=0.025)

        serial = WorkerPoolManager(overrides={"interval_solves": {"max": 1}})
        parallel = WorkerPoolManager(overrides={"interval_solves": {"max": 4}})
        a = glue(triple, IterationParams(), 0, solver, serial)
        b = glue(triple, IterationParams(), 0, solver, parallel)
        parallel.shutdown()

        assert a.partition.count == b.partition.count
        for left, right in zip(a.triple.v, b.triple.v):
            np.testing.assert_array_equal(left.values, right.values)
        for left, right in zip(a.triple.R, b.triple.R):
            np.testing.assert_array_equal(left.values, right.values)
