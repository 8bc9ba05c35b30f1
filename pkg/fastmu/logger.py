import logging
from typing import Optional

_ROOT = "fastmu"


def get_logger(name: Optional[str] = None) -> logging.Logger:
    # module loggers (fastmu.*) propagate to the package logger, which owns the only handler
    root = logging.getLogger(_ROOT)
    if not root.handlers:
        root.setLevel(logging.INFO)
        handler = logging.StreamHandler()
        fmt = logging.Formatter(
            "[%(asctime)s] [%(levelname)s] [%(name)s] %(message)s"
        )
        handler.setFormatter(fmt)
        root.addHandler(handler)
    return logging.getLogger(name or _ROOT)


def set_level(level: str | int) -> None:
    if isinstance(level, str):
        resolved = logging.getLevelName(level.upper())
        level = resolved if isinstance(resolved, int) else logging.INFO
    get_logger().setLevel(level)
