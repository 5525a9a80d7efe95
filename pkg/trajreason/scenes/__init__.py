"""
Scene data model, ego-centric normalization, synthetic scenarios, map
rasterization and dataset I/O.
"""

from trajreason.scenes.io import load_scenes, save_scenes, scene_from_dict, scene_to_dict
from trajreason.scenes.normalize import derive_heading, normalize_scene, to_world, transform_scene
from trajreason.scenes.raster import rasterize_map
from trajreason.scenes.split import split_dataset
from trajreason.scenes.synthetic import (
    KINDS,
    GeneratorConfig,
    generate_dataset,
    generate_synthetic_scene,
    load_generator_config,
)
from trajreason.scenes.types import (
    FUTURE_STEPS,
    HISTORY_LENGTH,
    HISTORY_STEPS,
    MAP_CHANNELS,
    SAMPLE_PERIOD_S,
    DatasetSplit,
    MapRaster,
    RasterConfig,
    Scene,
    Track,
)

__all__ = [
    "Track",
    "Scene",
    "MapRaster",
    "RasterConfig",
    "DatasetSplit",
    "HISTORY_STEPS",
    "HISTORY_LENGTH",
    "FUTURE_STEPS",
    "SAMPLE_PERIOD_S",
    "MAP_CHANNELS",
    "normalize_scene",
    "derive_heading",
    "transform_scene",
    "to_world",
    "rasterize_map",
    "KINDS",
    "GeneratorConfig",
    "generate_synthetic_scene",
    "generate_dataset",
    "load_generator_config",
    "save_scenes",
    "load_scenes",
    "scene_to_dict",
    "scene_from_dict",
    "split_dataset",
]
