"""
JSONL span file: one line per training step, timed prediction or evaluation,
so a loss curve can be read back with ``json.loads`` per line.
"""

import json
import logging
import os
import threading
from typing import IO, Any, Dict, Optional

import numpy as np

from trajreason.exporters.base import BaseExporter

logger = logging.getLogger("trajreason.exporters.file")


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


class FileExporter(BaseExporter):
    """Appends spans to ``file_path``, creating parent directories on first write."""

    def __init__(self, file_path: str):
        self.file_path = file_path
        self._handle: Optional[IO[str]] = None
        self._lock = threading.Lock()

    def _open(self) -> IO[str]:
        if self._handle is None:
            parent = os.path.dirname(self.file_path)
            if parent:
                os.makedirs(parent, exist_ok=True)
            self._handle = open(self.file_path, "a")
        return self._handle

    def export(self, span_data: Dict[str, Any]) -> bool:
        try:
            line = json.dumps(span_data, default=_jsonable)
            with self._lock:
                handle = self._open()
                handle.write(line + "\n")
                handle.flush()
            return True
        except (OSError, TypeError, ValueError) as e:
            logger.error(f"cannot write span to {self.file_path}: {e}")
            return False

    def stop(self) -> None:
        with self._lock:
            if self._handle is not None:
                self._handle.close()
                self._handle = None
