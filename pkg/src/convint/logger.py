#!/usr/bin/env python3
"""Logging configuration for the convint package."""

import logging
import os
import sys
from pathlib import Path
from typing import Optional

_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
_DATEFMT = "%Y-%m-%d %H:%M:%S"


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance for a convint module.

    Args:
        name: Logger name (usually __name__)

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)

    # Only configure if not already configured
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setLevel(logging.DEBUG)
        handler.setFormatter(logging.Formatter(_FORMAT, datefmt=_DATEFMT))

        logger.addHandler(handler)
        logger.setLevel(logging.INFO)
        logger.propagate = False

        if os.environ.get("CONVINT_DEBUG"):
            logger.setLevel(logging.DEBUG)

    return logger


def log_exception(logger: logging.Logger, message: str, exc: Exception) -> None:
    """Log an exception with context.

    Args:
        logger: Logger instance
        message: Context message
        exc: Exception to log
    """
    logger.error(f"{message}: {type(exc).__name__}: {str(exc)}", exc_info=True)


# Create module-level logger
_module_logger = get_logger(__name__)


def set_log_file(log_path: Optional[Path] = None) -> None:
    """Mirror every convint logger into a file.

    Args:
        log_path: Path to log file (default: $CONVINT_LOG_DIR/convint.log,
            falling back to ./logs/convint.log)
    """
    if log_path is None:
        log_dir = Path(os.environ.get("CONVINT_LOG_DIR", "logs"))
        log_path = log_dir / "convint.log"

    log_path.parent.mkdir(parents=True, exist_ok=True)

    file_handler = logging.FileHandler(log_path)
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(_FORMAT, datefmt=_DATEFMT))

    for name in list(logging.Logger.manager.loggerDict):
        if name.startswith("convint.") or name == __name__:
            logger = logging.getLogger(name)
            if not any(
                isinstance(h, logging.FileHandler)
                and Path(h.baseFilename) == log_path.resolve()
                for h in logger.handlers
            ):
                logger.addHandler(file_handler)

    _module_logger.info(f"Logging to file: {log_path}")
