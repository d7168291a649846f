#!/usr/bin/env python3
"""Stage manager that loads the registry and instantiates stages and suites."""

import importlib
import json
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from .base import PipelineStage, PoolManager, validate_stage
from .errors import ParameterError
from .logger import get_logger

logger = get_logger(__name__)


class StageManager:
    """Unified manager for stage lookup, module loading and instantiation."""

    def __init__(self, registry_path: Optional[Path] = None) -> None:
        """Initialize the stage manager.

        Args:
            registry_path: Path to registry.json file
        """
        self.registry_path = registry_path or (Path(__file__).parent / "registry.json")
        self.registry_data: Dict[str, Any] = {}
        self.loaded_modules: Dict[str, Any] = {}
        self._load_registry()

    def _load_registry(self) -> None:
        """Load the registry.json file."""
        if self.registry_path.exists():
            with open(self.registry_path, "r", encoding="utf-8") as f:
                self.registry_data = json.load(f)
        else:
            self.registry_data = {"version": "1.0.0", "stages": {}, "suites": {}, "categories": {}}

    def _resolve(self, entry_point: str) -> Any:  # type: ignore[ANN401]
        """Resolve ``package.module:attribute``.

        Raises:
            ParameterError: If the module or attribute cannot be found
        """
        module_name, _, attribute = entry_point.partition(":")
        if module_name not in self.loaded_modules:
            try:
                self.loaded_modules[module_name] = importlib.import_module(module_name)
            except ImportError as e:
                raise ParameterError(f"cannot import '{module_name}': {e}") from e
        module = self.loaded_modules[module_name]
        if not attribute:
            return module
        if not hasattr(module, attribute):
            raise ParameterError(f"'{module_name}' has no attribute '{attribute}'")
        return getattr(module, attribute)

    def create_stage(
        self,
        name: str,
        config: Optional[Dict[str, Any]] = None,
        pool_manager: Optional[PoolManager] = None,
    ) -> PipelineStage:
        """Create a stage instance from its registry entry.

        Raises:
            KeyError: If the stage is not registered
            ParameterError: If the entry point does not yield a valid stage
        """
        info = self.get_stage_info(name)
        target = self._resolve(info["entry_point"])
        stage = target(config or {}, pool_manager)
        if not validate_stage(stage):
            raise ParameterError(f"entry point of stage '{name}' does not implement PipelineStage")
        return stage

    def pipeline(
        self,
        configs: Optional[Dict[str, Dict[str, Any]]] = None,
        pool_manager: Optional[PoolManager] = None,
    ) -> List[PipelineStage]:
        """Instantiate the registered stage order."""
        configs = configs or {}
        return [self.create_stage(name, configs.get(name), pool_manager) for name in self.stage_order()]

    def stage_order(self) -> List[str]:
        return list(self.registry_data.get("pipeline", []))

    def list_stages(self) -> Dict[str, Dict[str, Any]]:
        """List all registered stages."""
        return self.registry_data.get("stages", {})

    def get_stage_info(self, name: str) -> Dict[str, Any]:
        """Get metadata for a specific stage."""
        stages = self.registry_data.get("stages", {})
        if name not in stages:
            raise KeyError(f"Stage '{name}' not found in registry")
        return stages[name]

    def list_suites(self) -> Dict[str, Dict[str, Any]]:
        """List all registered property suites."""
        return self.registry_data.get("suites", {})

    def get_suite(self, name: str) -> Callable[..., Any]:
        """Resolve a property suite callable.

        Raises:
            KeyError: If the suite is not registered
        """
        suites = self.list_suites()
        if name not in suites:
            raise KeyError(f"Suite '{name}' not found in registry")
        return self._resolve(suites[name]["entry_point"])

    def reload_registry(self) -> None:
        """Reload the registry from disk."""
        self.loaded_modules.clear()
        self._load_registry()


# Global manager instance
_manager: Optional[StageManager] = None


def get_manager() -> StageManager:
    """Get the global stage manager instance."""
    global _manager
    if _manager is None:
        _manager = StageManager()
    return _manager
