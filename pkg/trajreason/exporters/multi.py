"""
Fan-out of run spans, e.g. a JSONL loss curve plus console progress.
"""

import logging
from typing import Any, Dict, List

from trajreason.exporters.base import BaseExporter

logger = logging.getLogger("trajreason.exporters.multi")


class MultiExporter(BaseExporter):
    """Sends every span to each exporter; one failing sink does not stop the others."""

    def __init__(self, exporters: List[BaseExporter]):
        self.exporters = exporters

    def export(self, span_data: Dict[str, Any]) -> bool:
        delivered = False
        for exp in self.exporters:
            try:
                delivered = exp.export(span_data) or delivered
            except Exception as e:
                logger.error(f"{type(exp).__name__} failed on {span_data.get('span_type')} span: {e}")
        return delivered

    def start(self) -> None:
        for exp in self.exporters:
            exp.start()

    def stop(self) -> None:
        for exp in self.exporters:
            exp.stop()
