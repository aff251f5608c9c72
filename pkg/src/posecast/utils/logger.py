"""
Logging for posecast.

Library modules hold ``logger = get_logger(__name__)`` and never configure
handlers; the command line calls ``setup_logger`` once from the process
settings. Log records go to stderr so stdout carries only the tables and
status lines the commands print.
"""

import logging
import sys
from pathlib import Path
from typing import Optional, Union

ROOT_LOGGER_NAME = "posecast"

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def _handler(handler: logging.Handler, level: int) -> logging.Handler:
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    return handler


def setup_logger(
    name: str = ROOT_LOGGER_NAME,
    level: str = "INFO",
    log_file: Optional[Union[str, Path]] = None,
) -> logging.Logger:
    """
    Attach a stderr handler, and a file handler when ``log_file`` is given.

    Calling it again only changes the level of the existing handlers, so
    repeated ``main()`` calls in one process do not duplicate output.

    Args:
        name: Logger name, normally the package root
        level: DEBUG, INFO, WARNING, ERROR or CRITICAL
        log_file: Optional log file; parent directories are created

    Returns:
        The configured logger
    """
    logger = logging.getLogger(name)
    numeric_level = logging.getLevelName(level.upper())
    if not isinstance(numeric_level, int):
        numeric_level = logging.INFO
    logger.setLevel(numeric_level)

    if logger.handlers:
        for existing in logger.handlers:
            existing.setLevel(numeric_level)
        return logger

    logger.addHandler(_handler(logging.StreamHandler(sys.stderr), numeric_level))
    if log_file is not None:
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        logger.addHandler(_handler(logging.FileHandler(path, encoding="utf-8"), numeric_level))
    return logger


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """Logger for ``name`` (default: the caller's module) under the ``posecast`` root."""
    if name is None:
        name = sys._getframe(1).f_globals.get("__name__", "unknown")
    if name == ROOT_LOGGER_NAME or name.startswith(ROOT_LOGGER_NAME + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{ROOT_LOGGER_NAME}.{name}")
