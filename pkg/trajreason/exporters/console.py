"""
Console exporter for watching runs interactively.
"""

import json
from typing import Any, Dict

from trajreason.exporters.base import BaseExporter


class ConsoleExporter(BaseExporter):
    """Prints spans to console."""

    COLORS = {
        "RUN": "\033[92m",         # Green
        "TRAIN_STEP": "\033[94m",  # Blue
        "INFERENCE": "\033[96m",   # Cyan
        "EVALUATION": "\033[95m",  # Magenta
        "ABLATION": "\033[93m",    # Yellow
        "CHECKPOINT": "\033[93m",  # Yellow
        "STAGE": "\033[0m",
    }

    def __init__(self, colored: bool = True, verbose: bool = False):
        """
        Initialize console exporter.

        Args:
            colored: Whether to use ANSI colors in output
            verbose: Whether to print full span data as JSON
        """
        self.colored = colored
        self.verbose = verbose

    def _detail(self, span_data: Dict[str, Any]) -> str:
        parts = []
        if "step" in span_data:
            parts.append(f"step:{span_data['step']}")
        if "loss" in span_data:
            parts.append(f"loss:{span_data['loss']:.6g}")
        if "scene_id" in span_data:
            parts.append(f"scene:{span_data['scene_id']}")
        if "modality" in span_data:
            parts.append(f"modality:{span_data['modality']}")
        if "backbone" in span_data:
            parts.append(f"backbone:{span_data['backbone']}")
        return " ".join(parts)

    def export(self, span_data: Dict[str, Any]) -> bool:
        """Print span to console."""
        span_type = span_data.get("span_type", "UNKNOWN")
        name = span_data.get("name", "unknown")
        duration = span_data.get("duration_ms", 0)
        status = span_data.get("status", "OK")
        detail = self._detail(span_data)

        if self.colored:
            reset = "\033[0m"
            color = self.COLORS.get(span_type, reset)
            status_color = "\033[91m" if status == "ERROR" else "\033[92m"
            print(f"{color}[{span_type:12}]{reset} {name:30} | {duration:>10.3f}ms | {status_color}{status:5}{reset} | {detail}")
        else:
            print(f"[{span_type:12}] {name:30} | {duration:>10.3f}ms | {status:5} | {detail}")

        if self.verbose:
            print(f"    {json.dumps(span_data, indent=2)}")

        return True
