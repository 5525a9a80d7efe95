"""
trajreason - Map-aware trajectory prediction with a frozen transformer backbone
===============================================================================

Scene features are encoded per timestep, reprogrammed into the backbone's
embedding space, optionally fused with a rasterized local map, passed
through a frozen transformer and decoded into 12 future positions (6 s at
2 Hz). Only the adapters around the backbone are trained.

Usage:
    from trajreason import TrainConfig, generate_dataset, train, evaluate

    scenes = generate_dataset(200, seed=1, mix={"turn": 2, "intersection": 2, "straight": 1})
    config = TrainConfig().with_modality("ego_neighbor_map")
    checkpoint = train(config, scenes)
    report = evaluate(checkpoint, scenes)
    print(report.to_dict())

    # Command line
    trajreason generate --count 500 --out data/scenes.jsonl
    trajreason train --config configs/default.yaml

License: Apache-2.0
"""

__version__ = "0.1.0"

from trajreason.errors import (
    ConfigError,
    DataError,
    DivergenceError,
    FrozenContractError,
    ModalityError,
    SchemaError,
    TrajReasonError,
)
from trajreason.exporters import BaseExporter, ConsoleExporter, FileExporter, LoggingExporter, MultiExporter
from trajreason.harness import (
    MODALITIES,
    AblationTable,
    Checkpoint,
    TrainConfig,
    compare_backbones,
    evaluate,
    load_checkpoint,
    load_config,
    render_ablation_plot,
    render_scene_plot,
    run_ablation,
    run_map_utilization,
    save_checkpoint,
    train,
)
from trajreason.metrics import MetricsReport, ade, aggregate, fde, inference_efficiency, miss_rate
from trajreason.models import (
    FrozenBackbone,
    ToyBackbone,
    TrajectoryPredictor,
    create_backbone,
    predict,
    predict_world,
)
from trajreason.scenes import (
    MapRaster,
    Scene,
    Track,
    generate_dataset,
    generate_synthetic_scene,
    load_scenes,
    normalize_scene,
    rasterize_map,
    save_scenes,
    split_dataset,
)
from trajreason.telemetry import get_telemetry, setup_telemetry, trace_run, trace_stage

__all__ = [
    # Scenes
    "Scene",
    "Track",
    "MapRaster",
    "normalize_scene",
    "rasterize_map",
    "generate_synthetic_scene",
    "generate_dataset",
    "load_scenes",
    "save_scenes",
    "split_dataset",
    # Models
    "FrozenBackbone",
    "ToyBackbone",
    "create_backbone",
    "TrajectoryPredictor",
    "predict",
    "predict_world",
    # Metrics
    "MetricsReport",
    "ade",
    "fde",
    "miss_rate",
    "inference_efficiency",
    "aggregate",
    # Harness
    "TrainConfig",
    "MODALITIES",
    "load_config",
    "train",
    "evaluate",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "AblationTable",
    "run_ablation",
    "compare_backbones",
    "run_map_utilization",
    "render_scene_plot",
    "render_ablation_plot",
    # Telemetry
    "setup_telemetry",
    "get_telemetry",
    "trace_stage",
    "trace_run",
    "BaseExporter",
    "ConsoleExporter",
    "FileExporter",
    "LoggingExporter",
    "MultiExporter",
    # Errors
    "TrajReasonError",
    "ConfigError",
    "DataError",
    "SchemaError",
    "ModalityError",
    "DivergenceError",
    "FrozenContractError",
]
