"""
Builders turning a :class:`TrainConfig` into data, backbone and predictor.
"""

import logging
from typing import List, Optional, Tuple

from trajreason.harness.config import TrainConfig
from trajreason.models.backbone import BackboneSpec, FrozenBackbone, create_backbone
from trajreason.models.pipeline import TrajectoryPredictor
from trajreason.scenes.io import load_scenes
from trajreason.scenes.split import split_dataset
from trajreason.scenes.synthetic import GeneratorConfig, generate_dataset
from trajreason.scenes.types import DatasetSplit, Scene
from trajreason.telemetry import trace_stage

logger = logging.getLogger("trajreason.harness.factory")


def build_backbone(config: TrainConfig) -> FrozenBackbone:
    b = config.backbone
    return create_backbone(
        b.name,
        seed=b.seed,
        d_llm=b.d_llm,
        vocab_size=b.vocab_size,
        layers=b.layers,
        n_heads=b.n_heads,
        max_sequence_length=b.max_sequence_length,
        model_path=b.model_path,
    )


def build_predictor(config: TrainConfig, backbone_spec: BackboneSpec) -> TrajectoryPredictor:
    m, mod = config.model, config.modality
    return TrajectoryPredictor(
        backbone_spec,
        history_steps=config.data.history_steps,
        future_steps=config.data.future_steps,
        d_scene=m.d_scene,
        d_map=m.d_map,
        map_widths=m.map_widths,
        raster_size=config.data.raster.size,
        prototypes=m.prototypes,
        adapter_dim=m.adapter_dim,
        fusion_heads=m.fusion_heads,
        use_neighbors=mod.use_neighbors,
        use_map=mod.use_map,
        map_kv_mode=mod.map_kv_mode,
        prompt_text=mod.prompt_text,
        seed=config.seed,
    )


@trace_stage("load_dataset")
def load_dataset(config: TrainConfig, path: Optional[str] = None) -> List[Scene]:
    """Scenes from ``path`` (or ``data.path``), else a generated synthetic set."""
    d = config.data
    path = path or d.path
    if path:
        return load_scenes(path, history_length=d.history_steps + 1, future_steps=d.future_steps)
    logger.info(f"No data.path configured, generating {d.synthetic_count} synthetic scenes")
    return generate_dataset(
        d.synthetic_count,
        seed=d.synthetic_seed,
        mix=d.synthetic_mix,
        params=GeneratorConfig(raster=d.raster),
    )


def split_scenes(config: TrainConfig, scenes: List[Scene]) -> Tuple[DatasetSplit, List[Scene], List[Scene], List[Scene]]:
    split = split_dataset([s.id for s in scenes], config.data.split_seed, config.data.fractions)
    return (
        split,
        split.select(scenes, "train"),
        split.select(scenes, "validation"),
        split.select(scenes, "test"),
    )
