#!/usr/bin/env python3
"""Configuration loading helpers."""

import json
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, cast

import numpy as np
import yaml

from .logger import get_logger

logger = get_logger(__name__)

RUN_CONFIG_NAME = "convint.yaml"


class ConfigLoader:
    """Centralized configuration loader for runs and stages."""

    @staticmethod
    def load_config(config_path: Path) -> Dict[str, Any]:
        """Load configuration from a YAML or JSON file.

        Args:
            config_path: Path to a .yaml/.yml/.json file

        Returns:
            Configuration dictionary or empty dict if not found or unreadable
        """
        if not config_path.exists():
            return {}

        try:
            with open(config_path, "r", encoding="utf-8") as f:
                if config_path.suffix == ".json":
                    data: Any = json.load(f)
                else:
                    data = yaml.safe_load(f)
        except (json.JSONDecodeError, yaml.YAMLError, OSError) as e:
            logger.warning(f"Could not read config {config_path}: {e}")
            return {}

        if not isinstance(data, dict):
            return {}
        # Handle both direct config and settings nested structure
        if "settings" in data and isinstance(data["settings"], dict):
            return cast(Dict[str, Any], data["settings"])
        return cast(Dict[str, Any], data)

    @staticmethod
    def find_run_config(start: Path) -> Optional[Path]:
        """Find a run configuration next to or above a path.

        Looks for convint.yaml in:
        1. The directory itself (or the file's directory)
        2. Its parent directory

        Args:
            start: File or directory to search from

        Returns:
            Path to the config file, or None
        """
        base = start if start.is_dir() else start.parent
        for candidate in (base / RUN_CONFIG_NAME, base.parent / RUN_CONFIG_NAME):
            if candidate.exists():
                return candidate
        return None


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursively merge two mappings; values from override win.

    Args:
        base: Default values
        override: Values to apply on top

    Returns:
        New merged dictionary
    """
    merged: Dict[str, Any] = dict(base)
    for key, value in override.items():
        current = merged.get(key)
        if isinstance(current, Mapping) and isinstance(value, Mapping):
            merged[key] = deep_merge(current, value)
        else:
            merged[key] = value
    return merged


def plain_data(value: Any) -> Any:  # type: ignore[ANN401]
    """Nested dicts/lists of builtins, for safe YAML or JSON dumping."""
    if isinstance(value, Mapping):
        return {str(k): plain_data(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain_data(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain_data(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value
