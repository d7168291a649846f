"""Worker pools for independent solves."""

from .concurrency import WorkerPoolManager, get_pool_manager, reset_for_testing

__all__ = ["WorkerPoolManager", "get_pool_manager", "reset_for_testing"]
