"""Logging configuration for the workbench"""

import logging
import sys
from logging.handlers import TimedRotatingFileHandler
from pathlib import Path
from typing import Optional

from app.core.config import Settings, get_settings

_HANDLER_TAG = "_adw_handler"


def _parse_rotation(rotation: str) -> tuple[int, str]:
    """Turn strings like '1 day' or '6 hours' into TimedRotatingFileHandler args"""
    interval_mapping = {
        "day": "D",
        "hour": "H",
        "minute": "M",
        "second": "S",
    }
    parts = rotation.split()
    if len(parts) == 2 and parts[0].isdigit():
        unit = interval_mapping.get(parts[1].lower().rstrip("s"), "D")
        return int(parts[0]), unit
    return 1, "D"


def setup_logging(
    settings: Optional[Settings] = None, level: Optional[str] = None
) -> None:
    """Configure process-wide logging

    Safe to call more than once: handlers installed by an earlier call are
    replaced instead of duplicated.
    """
    settings = settings or get_settings()
    logger = logging.getLogger()
    logger.setLevel((level or settings.log_level).upper())

    for handler in list(logger.handlers):
        if getattr(handler, _HANDLER_TAG, False):
            logger.removeHandler(handler)

    formatter = logging.Formatter(settings.log_format)

    # stdout is reserved for command output
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    setattr(console_handler, _HANDLER_TAG, True)
    logger.addHandler(console_handler)

    if settings.log_file:
        log_file = Path(settings.log_file)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        count, unit = _parse_rotation(settings.log_rotation)
        file_handler = TimedRotatingFileHandler(
            filename=str(log_file),
            when=unit,
            interval=count,
            backupCount=int(settings.log_retention.split()[0]),
            encoding="utf-8",
        )
        file_handler.setFormatter(formatter)
        file_handler.suffix = "%Y-%m-%d_%H-%M-%S"
        setattr(file_handler, _HANDLER_TAG, True)
        logger.addHandler(file_handler)

    # Set logging levels for third-party libraries
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("PIL").setLevel(logging.WARNING)
