"""Logging for the forecasting toolkit: one 'mordred' logger, one child per package area."""

import logging
import sys
from typing import Iterable, Optional

ROOT_LOGGER = "mordred"
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

# font and backend chatter at DEBUG
NOISY_LIBRARIES = ("matplotlib",)

RUN_SETTINGS = (
    "experiment.seed", "model.model_id", "data.system", "data.csv_path",
    "model.lookback", "model.horizon", "experiment.output_dir",
)


def _attach(logger: logging.Logger, handler: logging.Handler, level: int):
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(handler)


def setup_logger(config=None, name: str = ROOT_LOGGER) -> logging.Logger:
    """
    Configure the project logger from `config.logging` (level, optional file).

    Without a config the level is INFO and only stdout is used. Calling it
    again replaces the handlers, so each CLI invocation starts clean.

    Args:
        config: Config object with logging settings, or None.
        name: Logger name.

    Returns:
        Configured logger instance.
    """
    section = getattr(config, 'logging', None)
    level = getattr(logging, section.level.upper(), logging.INFO) if section else logging.INFO
    log_file = section.file if section else None

    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.propagate = False
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()

    _attach(logger, logging.StreamHandler(sys.stdout), level)
    if log_file:
        try:
            _attach(logger, logging.FileHandler(log_file), level)
        except OSError as e:
            logger.warning(f"Could not create file handler for {log_file}: {e}")

    for library in NOISY_LIBRARIES:
        logging.getLogger(library).setLevel(max(level, logging.WARNING))
    return logger


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    Child of the project logger ('mordred.<name>'), configuring the parent
    with defaults on first use.
    """
    root = logging.getLogger(ROOT_LOGGER)
    if not root.handlers:
        setup_logger(name=ROOT_LOGGER)
    return logging.getLogger(f"{ROOT_LOGGER}.{name}") if name else root


def describe_settings(config, keys: Iterable[str] = RUN_SETTINGS) -> str:
    """One-line 'key=value' summary of the dotted config keys that are set."""
    parts = []
    for dotted in keys:
        section, _, key = dotted.partition('.')
        value = getattr(getattr(config, section, None), key, None)
        if value is not None:
            parts.append(f"{key}={value}")
    return ", ".join(parts)
