#!/usr/bin/env python3
"""Base interface for pipeline stages."""

from abc import ABC, abstractmethod
from typing import Any, ContextManager, Dict, Optional, Protocol, runtime_checkable


@runtime_checkable
class PoolManager(Protocol):
    """Protocol for the worker-pool manager that stages can use."""

    def acquire_resource(
        self,
        pool_name: str,
        metadata: Optional[Dict[str, Any]] = None,
        timeout: Optional[int] = None,
    ) -> ContextManager[bool]:
        """Acquire a slot in a named pool."""
        ...

    def map_ordered(self, pool_name: str, fn: Any, items: Any) -> Any:  # type: ignore[ANN401]
        """Run fn over items in the pool, returning results in input order."""
        ...


@runtime_checkable
class PipelineStage(Protocol):
    """Standard interface for every stage of a convex-integration step.

    A stage receives the level state, fills in the fields it produces and
    returns it. Stages are created by the ``StageManager`` from registry.json.
    """

    name: str

    def run(self, state: Any) -> Any:  # type: ignore[ANN401]
        """Advance the level state by one stage.

        Args:
            state: ``LevelState`` carrying the inputs of the stage

        Returns:
            The same state with this stage's outputs set
        """
        ...

    def get_config_schema(self) -> Dict[str, Any]:
        """Return JSON schema for configuration validation."""
        ...

    def cleanup(self) -> None:
        """Release anything the stage holds after the level completes."""
        ...


class BaseStage(ABC):
    """Abstract base class for stages that provides common functionality."""

    name = "stage"

    def __init__(
        self,
        config: Optional[Dict[str, Any]] = None,
        pool_manager: Optional[PoolManager] = None,
    ) -> None:
        """Initialize stage with configuration and optional pool manager."""
        self.config = dict(config or {})
        # Ensure enabled is always a boolean
        enabled_value = self.config.get("enabled", True)
        self.enabled = enabled_value if isinstance(enabled_value, bool) else True
        self.pool_manager = pool_manager

    @abstractmethod
    def run(self, state: Any) -> Any:  # type: ignore[ANN401]
        """Advance the level state by one stage."""

    def get_config_schema(self) -> Dict[str, Any]:
        """Return JSON schema for configuration validation."""
        return {
            "type": "object",
            "properties": {
                "enabled": {
                    "type": "boolean",
                    "description": "Whether this stage runs",
                    "default": True,
                }
            },
        }

    def cleanup(self) -> None:
        """Clean up any resources. Override if needed."""
        pass

    def is_applicable(self, state: Any) -> bool:  # type: ignore[ANN401]
        """Check if this stage should run on the given state.

        Override this method to add custom filtering logic.
        """
        return self.enabled


def validate_stage(stage: Any) -> bool:  # type: ignore[ANN401]
    """Validate that an object implements the PipelineStage interface."""
    return isinstance(stage, PipelineStage)
