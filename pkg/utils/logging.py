"""
Logging configuration module
"""

import json
import logging
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Callable, Dict, Iterator, Optional

# Attributes every LogRecord carries; anything else came in through `extra`
_RECORD_ATTRS = frozenset(
    logging.LogRecord("", 0, "", 0, "", (), None).__dict__.keys()
) | {"message", "asctime"}

_run_fields: ContextVar[Dict[str, str]] = ContextVar("run_fields", default={})


@contextmanager
def run_context(**fields: str) -> Iterator[None]:
    """Attach fields (experiment, dataset, tier) to every record logged inside."""
    token = _run_fields.set({**_run_fields.get(), **fields})
    try:
        yield
    finally:
        _run_fields.reset(token)


class RunContextFilter(logging.Filter):
    """Copies the active run_context fields onto the record, explicit extras win."""

    def filter(self, record: logging.LogRecord) -> bool:
        for key, value in _run_fields.get().items():
            if not hasattr(record, key):
                setattr(record, key, value)
        return True


class JsonFormatter(logging.Formatter):
    def __init__(
        self, filter_func: Optional[Callable[[logging.LogRecord], bool]] = None
    ):
        super().__init__()
        self.filter_func = filter_func

    def format(self, record):
        if self.filter_func and not self.filter_func(record):
            return ""

        log_obj = {
            "timestamp": self.formatTime(record),
            "name": record.name,
            "level": record.levelname,
            "message": record.getMessage(),
        }
        for key, value in record.__dict__.items():
            if key not in _RECORD_ATTRS and not key.startswith("_"):
                log_obj[key] = value
        if record.exc_info:
            log_obj["exc_info"] = self.formatException(record.exc_info)
        return json.dumps(log_obj, default=str)


def setup_logging(env: str, debug: bool = False):
    """
    Setup global logging configuration.

    Local runs get one readable line per record with the run fields in front;
    other environments get one JSON object per line.

    Args:
        env: Environment name ('local', 'prod', etc.)
        debug: Debug mode flag, enables per-epoch progress
    """
    handler = logging.StreamHandler()
    handler.addFilter(RunContextFilter())
    if env == "local" or debug:
        handler.setFormatter(
            logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
        )
        level = logging.DEBUG if debug else logging.INFO
    else:
        handler.setFormatter(JsonFormatter())
        level = logging.INFO
    logging.basicConfig(level=level, handlers=[handler], force=True)
    # numpy/scipy warnings go through the warnings module, not here
    logging.captureWarnings(True)
