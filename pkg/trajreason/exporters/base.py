"""
Sink interface for run spans (training steps, timed predictions, evaluations).
"""

from abc import ABC, abstractmethod
from typing import Any, Dict


class BaseExporter(ABC):
    """Receives one finished span at a time."""

    @abstractmethod
    def export(self, span_data: Dict[str, Any]) -> bool:
        """Deliver ``span_data``; False when the sink rejected it."""

    def start(self) -> None:
        """Called once when telemetry is set up."""

    def stop(self) -> None:
        """Called on shutdown; release files or handlers here."""
