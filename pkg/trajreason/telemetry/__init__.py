"""
Run telemetry: spans for training steps, inference timing and runs.
"""

from trajreason.telemetry.decorators import trace_run, trace_stage
from trajreason.telemetry.span import Span
from trajreason.telemetry.telemetry import RunTelemetry, get_telemetry, setup_telemetry

__all__ = [
    "Span",
    "RunTelemetry",
    "setup_telemetry",
    "get_telemetry",
    "trace_stage",
    "trace_run",
]
