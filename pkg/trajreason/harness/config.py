"""
Run configuration: nested dataclasses loaded from YAML.

Every key has a default. Unknown keys at any level raise
:class:`~trajreason.errors.ConfigError` naming the dotted key.

Example::

    modality:
      use_map: false
    optimizer:
      steps: 500
      schedule: cosine
"""

import dataclasses
import logging
import os
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from typing import Any, Dict, Mapping, Optional, Tuple

import yaml

from trajreason.errors import ConfigError
from trajreason.models.pipeline import DEFAULT_PROMPT
from trajreason.scenes.types import FUTURE_STEPS, HISTORY_STEPS, SAMPLE_PERIOD_S, RasterConfig

logger = logging.getLogger("trajreason.harness.config")

LOSSES = ("mse", "smooth_l1")
MAP_KV_MODES = ("grid", "pooled")
MISS_MODES = ("scene", "point")
SCHEDULES = ("constant", "cosine")
EXPORTERS = ("log", "console", "file")

# (use_neighbors, use_map) per ablation modality
MODALITIES: Dict[str, Tuple[bool, bool]] = {
    "ego_only": (False, False),
    "ego_neighbor": (True, False),
    "ego_neighbor_map": (True, True),
}


@dataclass(frozen=True)
class DataConfig:
    """Scene source; with no ``path`` a synthetic dataset is generated in memory."""

    path: Optional[str] = None
    split_seed: int = 0
    fractions: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    history_steps: int = HISTORY_STEPS
    future_steps: int = FUTURE_STEPS
    raster: RasterConfig = field(default_factory=RasterConfig)
    synthetic_count: int = 500
    synthetic_seed: int = 0
    synthetic_mix: Optional[Dict[str, float]] = None


@dataclass(frozen=True)
class ModalityConfig:
    use_neighbors: bool = True
    use_map: bool = True
    map_kv_mode: str = "grid"
    prompt_text: str = DEFAULT_PROMPT

    @property
    def name(self) -> str:
        for name, flags in MODALITIES.items():
            if flags == (self.use_neighbors, self.use_map):
                return name
        return "ego_map"


@dataclass(frozen=True)
class ModelConfig:
    d_scene: int = 64
    d_map: int = 64
    map_widths: Tuple[int, ...] = (16, 32, 64)
    prototypes: int = 32
    adapter_dim: Optional[int] = None
    fusion_heads: int = 4


@dataclass(frozen=True)
class BackboneConfig:
    """``d_llm`` and the other sizes only apply to the toy backbone."""

    name: str = "toy"
    seed: int = 0
    d_llm: int = 64
    vocab_size: int = 256
    layers: int = 2
    n_heads: int = 4
    max_sequence_length: int = 512
    model_path: Optional[str] = None


@dataclass(frozen=True)
class OptimizerConfig:
    step_size: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 16
    steps: int = 2000
    schedule: str = "constant"
    grad_clip: float = 0.0


@dataclass(frozen=True)
class EvaluationConfig:
    horizons: Tuple[float, ...] = (2, 4, 6)
    fde_horizons: Tuple[float, ...] = (6,)
    miss_threshold: float = 2.0
    miss_mode: str = "scene"
    warmup: int = 3


@dataclass(frozen=True)
class TelemetryConfig:
    exporter: str = "log"
    file_path: Optional[str] = None
    console: bool = False
    log_every: int = 100


@dataclass(frozen=True)
class TrainConfig:
    data: DataConfig = field(default_factory=DataConfig)
    modality: ModalityConfig = field(default_factory=ModalityConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    telemetry: TelemetryConfig = field(default_factory=TelemetryConfig)
    loss: str = "mse"
    seed: int = 0
    run_name: str = "trajreason"
    checkpoint_path: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]]) -> "TrainConfig":
        return _build(cls, data or {}, "")

    def to_dict(self) -> Dict[str, Any]:
        return _plain(asdict(self))

    def with_modality(self, modality: str) -> "TrainConfig":
        if modality not in MODALITIES:
            raise ConfigError(f"Unknown modality: {modality}. Use one of {', '.join(MODALITIES)}")
        use_neighbors, use_map = MODALITIES[modality]
        return replace(self, modality=replace(self.modality, use_neighbors=use_neighbors, use_map=use_map))

    def with_backbone(self, name: str) -> "TrainConfig":
        return replace(self, backbone=replace(self.backbone, name=name))

    def with_seed(self, seed: int) -> "TrainConfig":
        return replace(self, seed=seed)

    def validate(self) -> "TrainConfig":
        """Check cross-section consistency; returns ``self``."""
        data, model, backbone, opt, ev = self.data, self.model, self.backbone, self.optimizer, self.evaluation
        _choice("loss", self.loss, LOSSES)
        _choice("modality.map_kv_mode", self.modality.map_kv_mode, MAP_KV_MODES)
        _choice("evaluation.miss_mode", ev.miss_mode, MISS_MODES)
        _choice("optimizer.schedule", opt.schedule, SCHEDULES)
        _choice("telemetry.exporter", self.telemetry.exporter, EXPORTERS)

        if len(data.fractions) != 3 or any(f < 0 for f in data.fractions):
            raise ConfigError(f"data.fractions must be three non-negative numbers, got {data.fractions}")
        if abs(sum(data.fractions) - 1.0) > 1e-9:
            raise ConfigError(f"data.fractions must sum to 1, got {sum(data.fractions)}")
        if data.path is not None and not os.path.exists(data.path):
            raise ConfigError(f"data.path does not exist: {data.path}")

        for key, value in (
            ("data.history_steps", data.history_steps),
            ("data.future_steps", data.future_steps),
            ("model.d_scene", model.d_scene),
            ("model.d_map", model.d_map),
            ("model.prototypes", model.prototypes),
            ("model.fusion_heads", model.fusion_heads),
            ("backbone.d_llm", backbone.d_llm),
            ("backbone.n_heads", backbone.n_heads),
            ("optimizer.batch_size", opt.batch_size),
        ):
            if value <= 0:
                raise ConfigError(f"{key} must be positive, got {value}")
        if opt.steps < 0 or opt.step_size <= 0:
            raise ConfigError("optimizer.steps must be >= 0 and optimizer.step_size > 0")
        if not model.map_widths or any(w <= 0 for w in model.map_widths):
            raise ConfigError(f"model.map_widths must be positive, got {model.map_widths}")

        if backbone.d_llm % backbone.n_heads:
            raise ConfigError(f"backbone.d_llm={backbone.d_llm} is not divisible by backbone.n_heads={backbone.n_heads}")
        if backbone.d_llm % model.fusion_heads:
            raise ConfigError(
                f"backbone.d_llm={backbone.d_llm} is not divisible by model.fusion_heads={model.fusion_heads}"
            )

        max_horizon = data.future_steps * SAMPLE_PERIOD_S
        for h in tuple(ev.horizons) + tuple(ev.fde_horizons):
            if h <= 0 or h > max_horizon + 1e-9:
                raise ConfigError(f"evaluation horizon {h}s outside (0, {max_horizon}]s")
        return self


def _choice(key: str, value: str, options: Tuple[str, ...]) -> None:
    if value not in options:
        raise ConfigError(f"{key} must be one of {', '.join(options)}, got '{value}'")


def _build(cls, data: Any, prefix: str):
    if not isinstance(data, Mapping):
        raise ConfigError(f"'{prefix.rstrip('.') or 'config'}' must be a mapping")
    known = {f.name: f for f in fields(cls)}
    values = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown config key '{prefix}{key}'")
        default = _default_of(known[key])
        if is_dataclass(default) and value is not None:
            value = _build(type(default), value, f"{prefix}{key}.")
        elif isinstance(value, list):
            value = tuple(value)
        values[key] = value
    try:
        return cls(**values)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid '{prefix.rstrip('.') or 'config'}' section: {e}") from e


def _default_of(f: dataclasses.Field) -> Any:
    if f.default_factory is not dataclasses.MISSING:
        return f.default_factory()
    return f.default


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def load_config(path: str) -> TrainConfig:
    """Read and validate a YAML run configuration."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: invalid YAML: {e}") from e
    config = TrainConfig.from_dict(data or {}).validate()
    logger.debug(f"Loaded config {path}")
    return config


def save_config(config: TrainConfig, path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(config.to_dict(), f, sort_keys=False)
