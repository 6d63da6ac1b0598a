"""Logging configuration for the PCAAC toolkit."""
import logging
from datetime import datetime
from pathlib import Path
from typing import Optional

from rich.logging import RichHandler

ROOT_LOGGER = "pcaac"


def setup_logger(name: str = ROOT_LOGGER, level: str = "INFO",
                 log_dir: Optional[str] = None) -> logging.Logger:
    """
    Setup and configure logger for the application.

    Args:
        name: Logger name
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_dir: Directory for a DEBUG-level log file, None to log to console only

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)

    # Prevent duplicate handlers
    if logger.handlers:
        return logger

    log_level = getattr(logging, level.upper(), logging.INFO)
    logger.setLevel(logging.DEBUG if log_dir else log_level)
    logger.propagate = False

    console_handler = RichHandler(show_path=False, markup=False)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(logging.Formatter('%(message)s'))
    logger.addHandler(console_handler)

    if log_dir:
        path = Path(log_dir)
        path.mkdir(parents=True, exist_ok=True)
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        file_handler = logging.FileHandler(
            path / f"pcaac_{timestamp}.log",
            encoding='utf-8'
        )
        file_handler.setLevel(logging.DEBUG)  # Always log DEBUG to file
        file_handler.setFormatter(logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s'
        ))
        logger.addHandler(file_handler)

    return logger


def get_logger(name: str = ROOT_LOGGER) -> logging.Logger:
    """Get a child of the application logger, e.g. ``pcaac.cluster_filter``."""
    short = name.rsplit('.', 1)[-1]
    if name == ROOT_LOGGER or name.startswith(ROOT_LOGGER + '.'):
        return logging.getLogger(name)
    return logging.getLogger(f"{ROOT_LOGGER}.{short}")
