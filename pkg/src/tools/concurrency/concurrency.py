#!/usr/bin/env python3
"""Worker pool manager for the iteration's independent solves.

Named pools bound how many interval solves, flow-map integrations and
perturbation evaluations run at once. Each pool owns a bounded semaphore and
a thread pool; numpy and scipy FFTs release the GIL, so threads run the
spectral work in parallel. ``map_ordered`` always returns results in input
order, so every reduction over the results is deterministic regardless of
pool size.
"""
import json
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Dict, Generator, Iterable, List, Optional, TypeVar, cast

from convint.logger import get_logger

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class WorkerPoolManager:
    """Manages the named worker pools used by the pipeline stages."""

    def __init__(
        self: "WorkerPoolManager",
        config_path: Optional[str] = None,
        overrides: Optional[Dict[str, Any]] = None,
    ) -> None:
        """Initialize the pool manager.

        Args:
            config_path: Path to a JSON pool configuration file
            overrides: Per-pool settings merged over the file (the run
                configuration's ``concurrency`` section)
        """
        self._config_path = config_path
        self._resource_pools: Dict[str, Dict[str, Any]] = {}
        self._settings: Dict[str, Any] = {}
        self._debug: bool = False
        self._lock = threading.Lock()
        self._semaphores: Dict[str, threading.BoundedSemaphore] = {}
        self._executors: Dict[str, ThreadPoolExecutor] = {}
        self._active: Dict[str, int] = {}

        self._load_config()
        if overrides:
            self.apply_overrides(overrides)

    def _load_config(self: "WorkerPoolManager") -> None:
        """Load configuration from file or use defaults."""
        config = self._read_config_file(self._get_config_file_path())
        if config is None:
            config = self._get_default_config()
        self._apply_config(config)

    def _get_config_file_path(self: "WorkerPoolManager") -> Path:
        """Get the path to the configuration file."""
        if self._config_path and Path(self._config_path).exists():
            return Path(self._config_path)
        return Path(__file__).parent / "config.json"

    def _read_config_file(
        self: "WorkerPoolManager", config_file: Path
    ) -> Optional[Dict[str, Any]]:
        """Read configuration from file."""
        if not config_file.exists():
            return None

        result: Optional[Dict[str, Any]] = None
        try:
            with open(config_file, "r", encoding="utf-8") as f:
                data: Any = json.load(f)
                if isinstance(data, dict):
                    result = cast(Dict[str, Any], data)
        except (json.JSONDecodeError, OSError) as e:
            logger.warning(f"Unreadable pool configuration {config_file}: {e}")

        return result

    def _get_default_config(self: "WorkerPoolManager") -> Dict[str, Any]:
        """Get default configuration."""
        return {
            "resource_pools": {
                "interval_solves": {
                    "max": 4,
                    "timeout": 600,
                    "description": "Local Navier-Stokes solves on gluing intervals",
                },
                "flow_maps": {
                    "max": 4,
                    "timeout": 300,
                    "description": "Backward flow maps per gluing interval",
                },
                "perturbation": {
                    "max": 2,
                    "timeout": 300,
                    "description": "Per-time evaluation of the perturbation",
                },
            },
            "settings": {"debug": False},
        }

    def _apply_config(self: "WorkerPoolManager", config: Dict[str, Any]) -> None:
        """Apply configuration to instance attributes."""
        self._resource_pools = {
            name: dict(values) for name, values in config.get("resource_pools", {}).items()
        }
        self._settings = config.get("settings", {})
        self._debug = bool(self._settings.get("debug", False))
        self._reset_pools()

    def apply_overrides(self: "WorkerPoolManager", overrides: Dict[str, Any]) -> None:
        """Merge per-pool settings, e.g. ``{"interval_solves": {"max": 1}}``.

        Args:
            overrides: Mapping from pool name to the settings to replace
        """
        for name, values in overrides.items():
            if not isinstance(values, dict):
                continue
            self._resource_pools.setdefault(name, {"max": 1, "timeout": 180})
            self._resource_pools[name].update(values)
        self._reset_pools()

    def _reset_pools(self: "WorkerPoolManager") -> None:
        """Recreate semaphores and drop executors after a configuration change."""
        with self._lock:
            for executor in self._executors.values():
                executor.shutdown(wait=True)
            self._executors = {}
            self._semaphores = {
                name: threading.BoundedSemaphore(max(1, int(cfg.get("max", 1))))
                for name, cfg in self._resource_pools.items()
            }
            self._active = {name: 0 for name in self._resource_pools}

    def _debug_log(self: "WorkerPoolManager", message: str) -> None:
        """Log debug messages if debug is enabled."""
        if self._debug:
            logger.debug(message)

    def pool_size(self: "WorkerPoolManager", pool_name: str) -> int:
        """Configured maximum of a pool (1 for unknown pools)."""
        return max(1, int(self._resource_pools.get(pool_name, {}).get("max", 1)))

    def can_acquire_resource(self: "WorkerPoolManager", pool_name: str) -> bool:
        """Check if a slot is free without acquiring it.

        Args:
            pool_name: Name of the resource pool

        Returns:
            True if a slot can be acquired, False otherwise
        """
        if pool_name not in self._resource_pools:
            return False
        with self._lock:
            return self._active[pool_name] < self.pool_size(pool_name)

    @contextmanager
    def acquire_resource(
        self: "WorkerPoolManager",
        pool_name: str,
        metadata: Optional[Dict[str, Any]] = None,
        timeout: Optional[float] = None,
    ) -> Generator[bool, None, None]:
        """Context manager for acquiring and releasing a pool slot.

        Args:
            pool_name: Name of the resource pool
            metadata: Optional metadata about the operation
            timeout: Optional timeout in seconds (overrides pool default)

        Yields:
            True if a slot was acquired, False otherwise
        """
        if pool_name not in self._resource_pools:
            self._debug_log(f"Unknown pool: {pool_name}")
            yield False
            return

        semaphore = self._semaphores[pool_name]
        actual_timeout = (
            timeout if timeout is not None else self._resource_pools[pool_name].get("timeout", 180)
        )
        acquired = semaphore.acquire(timeout=actual_timeout) if actual_timeout else semaphore.acquire(
            blocking=False
        )
        if acquired:
            with self._lock:
                self._active[pool_name] += 1
            self._debug_log(f"Acquired {pool_name} slot {metadata or {}}")
        else:
            self._debug_log(f"Timeout acquiring resource from {pool_name}")
        try:
            yield acquired
        finally:
            if acquired:
                with self._lock:
                    self._active[pool_name] -= 1
                semaphore.release()

    def _executor(self: "WorkerPoolManager", pool_name: str) -> ThreadPoolExecutor:
        with self._lock:
            if pool_name not in self._executors:
                self._executors[pool_name] = ThreadPoolExecutor(
                    max_workers=self.pool_size(pool_name), thread_name_prefix=f"convint-{pool_name}"
                )
            return self._executors[pool_name]

    def map_ordered(
        self: "WorkerPoolManager",
        pool_name: str,
        fn: Callable[[T], R],
        items: Iterable[T],
    ) -> List[R]:
        """Apply ``fn`` to every item in the pool, results in input order.

        The first exception raised by a task is re-raised after every task
        has finished.

        Args:
            pool_name: Name of the resource pool
            fn: Work item
            items: Inputs

        Returns:
            Results in the order of ``items``
        """
        work = list(items)
        if not work:
            return []
        if self.pool_size(pool_name) == 1 or len(work) == 1:
            return [fn(item) for item in work]

        def guarded(item: T) -> R:
            with self.acquire_resource(pool_name, timeout=0) as ok:
                if not ok:
                    self._debug_log(f"{pool_name} saturated; running inline")
                return fn(item)

        started = time.monotonic()
        futures: List[Future[R]] = [self._executor(pool_name).submit(guarded, item) for item in work]
        errors = [f.exception() for f in futures]
        self._debug_log(f"{pool_name}: {len(work)} tasks in {time.monotonic() - started:.3f}s")
        for error in errors:
            if error is not None:
                raise error
        return [f.result() for f in futures]

    def get_status(self: "WorkerPoolManager") -> Dict[str, Any]:
        """Get current status of all pools.

        Returns:
            Dictionary with current counts and limits for all pools
        """
        status: Dict[str, Dict[str, Any]] = {
            "pools": {},
            "total": {"current": 0, "max": 0},
        }
        with self._lock:
            for pool_name, pool_config in self._resource_pools.items():
                current = self._active.get(pool_name, 0)
                max_count = self.pool_size(pool_name)
                status["pools"][pool_name] = {
                    "current": current,
                    "max": max_count,
                    "available": max_count - current,
                    "timeout": pool_config.get("timeout", 180),
                    "description": pool_config.get("description", ""),
                }
                status["total"]["current"] += current
                status["total"]["max"] += max_count
        return status

    def shutdown(self: "WorkerPoolManager") -> None:
        """Stop every executor."""
        with self._lock:
            for executor in self._executors.values():
                executor.shutdown(wait=True)
            self._executors = {}

    # Test helper methods - only for testing purposes
    def get_resource_pools_for_testing(self) -> Dict[str, Any]:
        """Get resource pools configuration (for testing only)."""
        return self._resource_pools


_manager: Optional[WorkerPoolManager] = None
_manager_lock = threading.Lock()


def get_pool_manager(
    config_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> WorkerPoolManager:
    """Get the process-wide pool manager, creating it on first use.

    Args:
        config_path: Optional path to configuration file (first call only)
        overrides: Optional pool overrides, applied on every call that passes them

    Returns:
        WorkerPoolManager instance
    """
    global _manager
    with _manager_lock:
        if _manager is None:
            _manager = WorkerPoolManager(config_path, overrides)
        elif overrides:
            _manager.apply_overrides(overrides)
        return _manager


def reset_for_testing() -> None:
    """Drop the singleton (tests only)."""
    global _manager
    with _manager_lock:
        if _manager is not None:
            _manager.shutdown()
        _manager = None
