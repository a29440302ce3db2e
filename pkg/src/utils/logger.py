"""Logging configuration for tileseg.

One process-wide ``tileseg`` logger writes to the console and to
``$TILESEG_LOG_DIR/app.log``. A run can additionally keep its own log next to
its artifacts through ``attach_run_log``.
"""
import logging
import os
from pathlib import Path
from typing import Union

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
RUN_LOG_NAME = "run.log"


def _formatter() -> logging.Formatter:
    return logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)


def setup_logger(name: str = "tileseg", log_level: str = "INFO") -> logging.Logger:
    """Set up logger with file and console handlers.

    Args:
        name: Logger name
        log_level: Level of the console handler (DEBUG, INFO, WARNING, ERROR);
            the file handler always records DEBUG

    Returns:
        Configured logger instance
    """
    log_dir = Path(os.getenv("TILESEG_LOG_DIR", "logs"))
    log_dir.mkdir(parents=True, exist_ok=True)

    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG)

    # Avoid duplicate handlers
    if logger.handlers:
        return logger

    file_handler = logging.FileHandler(log_dir / "app.log", encoding="utf-8")
    file_handler.setLevel(logging.DEBUG)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(getattr(logging, log_level.upper(), logging.INFO))

    file_handler.setFormatter(_formatter())
    console_handler.setFormatter(_formatter())

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)

    return logger


def attach_run_log(out_dir: Union[str, Path], name: str = "tileseg") -> logging.FileHandler:
    """Also log DEBUG and above to ``<out_dir>/run.log``.

    Attaching the same run directory twice keeps a single handler.

    Returns:
        The file handler, for ``detach_run_log``
    """
    path = (Path(out_dir) / RUN_LOG_NAME).resolve()
    target = logging.getLogger(name)
    for handler in target.handlers:
        if isinstance(handler, logging.FileHandler) and Path(handler.baseFilename) == path:
            return handler

    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, encoding="utf-8")
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(_formatter())
    target.addHandler(handler)
    return handler


def detach_run_log(handler: logging.Handler, name: str = "tileseg") -> None:
    """Remove and close a handler added by ``attach_run_log``."""
    logging.getLogger(name).removeHandler(handler)
    handler.close()


# Global logger instance
logger = setup_logger(log_level=os.getenv("TILESEG_LOG_LEVEL", "INFO"))
