"""
Exception hierarchy for trajreason.

Each class maps onto one CLI exit code (see ``trajreason.harness.cli``).
"""


class TrajReasonError(Exception):
    """Root of all library errors."""

    exit_code = 1


class ConfigError(TrajReasonError, ValueError):
    """Invalid configuration, unknown key, or inconsistent dimensions."""

    exit_code = 2


class DataError(TrajReasonError, ValueError):
    """Problem with scene data."""

    exit_code = 3


class SchemaError(DataError):
    """A scene record violates the JSONL schema."""

    def __init__(self, message: str, line: int = None, field: str = None):
        self.line = line
        self.field = field
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if field is not None:
            prefix.append(f"field '{field}'")
        super().__init__(f"{', '.join(prefix)}: {message}" if prefix else message)


class ModalityError(DataError):
    """Scenes lack data the configured modality requires."""

    def __init__(self, message: str, scene_ids=None):
        self.scene_ids = list(scene_ids or [])
        if self.scene_ids:
            message = f"{message}: {', '.join(self.scene_ids)}"
        super().__init__(message)


class DivergenceError(TrajReasonError, RuntimeError):
    """Training produced a non-finite loss."""

    exit_code = 4

    def __init__(self, step: int, loss: float):
        self.step = step
        self.loss = loss
        super().__init__(f"loss became non-finite ({loss}) at step {step}")


class FrozenContractError(TrajReasonError, RuntimeError):
    """Backbone parameters changed or do not match a checkpoint."""
