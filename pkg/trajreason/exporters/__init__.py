"""
Span exporters.

- ConsoleExporter: one line per span on stdout
- FileExporter: JSONL file output (loss curves, timings)
- LoggingExporter: spans as records on the ``trajreason.runs`` logger
- MultiExporter: fan out to several exporters
"""

from trajreason.exporters.base import BaseExporter
from trajreason.exporters.console import ConsoleExporter
from trajreason.exporters.file import FileExporter
from trajreason.exporters.log import LoggingExporter
from trajreason.exporters.multi import MultiExporter

__all__ = [
    "BaseExporter",
    "ConsoleExporter",
    "FileExporter",
    "LoggingExporter",
    "MultiExporter",
]
