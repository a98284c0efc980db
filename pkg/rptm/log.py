"""
RPTM Logging
Console logging setup for the command-line tools.
"""

import logging

from rich.console import Console
from rich.logging import RichHandler

LOGGER_NAME = "rptm"


def setup_logging(verbosity: int = 0) -> logging.Logger:
    """Attach a rich stderr handler to the package logger.

    verbosity: -1 quiet (warnings), 0 info, 1 or more debug.
    """
    if verbosity < 0:
        level = logging.WARNING
    elif verbosity == 0:
        level = logging.INFO
    else:
        level = logging.DEBUG

    logger = logging.getLogger(LOGGER_NAME)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    handler = RichHandler(
        console=Console(stderr=True),
        show_time=False,
        show_path=False,
        markup=False,
        rich_tracebacks=False,
    )
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return logger
