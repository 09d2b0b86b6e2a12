import datetime
import json
import logging
from logging.handlers import BufferingHandler
from os import PathLike
from typing import Any, Dict, Union


def _entry(record: logging.LogRecord) -> Dict[str, Any]:
    exc_type, exc, _ = record.exc_info or (None, None, None)
    return {
        "timestamp": datetime.datetime.fromtimestamp(record.created).isoformat(
            sep=" ", timespec="milliseconds"
        ),
        "vehicle": getattr(record, "vehicle", None),
        "logger": record.name,
        "message": record.getMessage(),
        "log_level": record.levelname,
        "exception": None if exc is None else str(exc),
        "exception_type": None if exc_type is None else exc_type.__name__,
        "filename": record.filename,
        "func_name": record.funcName,
    }


class JsonLinesLogHandler(BufferingHandler):
    """Buffers log records and appends them, one JSON object per line, to `path`."""

    def __init__(self, path: Union[str, PathLike], capacity=50):
        self.path = path
        super().__init__(capacity)

    def flush(self):
        self.acquire()
        try:
            if self.buffer:
                lines = "".join(json.dumps(_entry(r), sort_keys=True) + "\n" for r in self.buffer)
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(lines)
            self.buffer = []
        except Exception as e:
            print(f"Exception while flushing logs: {e}")
        finally:
            self.release()
