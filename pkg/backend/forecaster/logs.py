# forecaster/logs.py
# One rich handler for the whole toolkit.
# Modules log with a [component] prefix so lines are easy to grep:
#   [train] epoch 3/30 train=0.0123 val=0.0150 *

import logging

from rich.logging import RichHandler  # type: ignore[reportMissingImports]

from config import LOG_LEVEL

_configured = False


def get_logger(name: str) -> logging.Logger:
    global _configured
    if not _configured:
        handler = RichHandler(show_path=False, markup=False, rich_tracebacks=False)
        handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
        root = logging.getLogger("deepexpress")
        root.addHandler(handler)
        level = LOG_LEVEL if LOG_LEVEL in logging._nameToLevel else "INFO"
        root.setLevel(level)
        root.propagate = False
        _configured = True
    return logging.getLogger(f"deepexpress.{name}")
