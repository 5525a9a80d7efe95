"""
Decorators for tracing pipeline stages and whole runs.
"""

import time
from functools import wraps
from typing import Callable


def _get_telemetry():
    """Import telemetry to avoid circular imports."""
    from trajreason.telemetry.telemetry import get_telemetry
    return get_telemetry()


def trace_stage(name: str = None, span_type: str = "STAGE") -> Callable:
    """
    Decorator emitting one span per call of the wrapped function.

    Example:
        @trace_stage("load_scenes")
        def load(path):
            ...
    """
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs):
            telemetry = _get_telemetry()
            start = time.perf_counter()

            try:
                result = func(*args, **kwargs)
                duration = round((time.perf_counter() - start) * 1000, 3)
                telemetry.send_span(
                    span_type=span_type,
                    name=name or func.__name__,
                    duration_ms=duration
                )
                return result

            except Exception as e:
                duration = round((time.perf_counter() - start) * 1000, 3)
                telemetry.send_span(
                    span_type=span_type,
                    name=name or func.__name__,
                    duration_ms=duration,
                    status="ERROR",
                    is_error=1,
                    error_message=str(e),
                    error_type=type(e).__name__
                )
                raise
        return wrapper
    return decorator


def trace_run(name: str) -> Callable:
    """Decorator starting a fresh trace and emitting a RUN span for the call."""
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs):
            telemetry = _get_telemetry()
            telemetry.new_trace()
            start = time.perf_counter()

            try:
                result = func(*args, **kwargs)
                duration = round((time.perf_counter() - start) * 1000, 3)
                telemetry.send_span(span_type="RUN", name=name, duration_ms=duration)
                return result

            except Exception as e:
                duration = round((time.perf_counter() - start) * 1000, 3)
                telemetry.send_span(
                    span_type="RUN",
                    name=name,
                    duration_ms=duration,
                    status="ERROR",
                    is_error=1,
                    error_message=str(e),
                    error_type=type(e).__name__
                )
                raise
        return wrapper
    return decorator
