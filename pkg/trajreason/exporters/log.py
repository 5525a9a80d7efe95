"""
Logging exporter: routes spans through the standard logging tree.
"""

import json
import logging
from typing import Any, Dict

from trajreason.exporters.base import BaseExporter


class LoggingExporter(BaseExporter):
    """Emits each span as one log record; errors at ERROR, the rest at DEBUG."""

    def __init__(self, logger_name: str = "trajreason.runs"):
        self.logger = logging.getLogger(logger_name)

    def export(self, span_data: Dict[str, Any]) -> bool:
        level = logging.ERROR if span_data.get("is_error") else logging.DEBUG
        if self.logger.isEnabledFor(level):
            self.logger.log(level, "%s %s", span_data.get("span_type", "UNKNOWN"), json.dumps(span_data))
        return True
