"""Logging configuration for the engine."""

import logging
import sys
from typing import Optional

from qwalk.core.config import settings


def setup_logging(level: Optional[str] = None) -> None:
    """Configure engine logging."""
    level_name = (level or settings.log_level).upper()

    logger = logging.getLogger("qwalk")
    logger.setLevel(getattr(logging, level_name))

    # Reconfiguring must not stack handlers
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(getattr(logging, level_name))
    console_handler.setFormatter(logging.Formatter(settings.log_format))
    logger.addHandler(console_handler)

    logger.propagate = False


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance."""
    return logging.getLogger(f"qwalk.{name}")
