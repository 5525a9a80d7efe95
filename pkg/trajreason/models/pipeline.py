"""
End-to-end predictor: scene encoder -> reprogramming adapter -> optional
map fusion -> frozen backbone -> linear decoder.
"""

import logging
from typing import Dict, Optional, Sequence

import numpy as np
import torch
import torch.nn as nn

from trajreason.errors import ConfigError, ModalityError
from trajreason.models.backbone import BackboneSpec, FrozenBackbone
from trajreason.models.batch import SceneBatch, collate_scenes
from trajreason.models.fusion_decoder import LinearDecoder, MapFusion, assemble_input
from trajreason.models.map_encoder import MapEncoder
from trajreason.models.reprogramming_adapter import ReprogrammingAdapter
from trajreason.models.scene_encoder import SceneEncoder
from trajreason.scenes.normalize import normalize_scene, to_world
from trajreason.scenes.types import FUTURE_STEPS, HISTORY_STEPS, Scene

logger = logging.getLogger("trajreason.models.pipeline")

TRAINABLE_GROUPS = ("scene_encoder", "map_encoder", "adapter", "fusion", "decoder")

DEFAULT_PROMPT = (
    "Predict the next 12 positions of the ego vehicle given 4 observed scene states and the local map."
)


class TrajectoryPredictor(nn.Module):
    """
    All trainable parameter groups of the pipeline.

    The frozen backbone is passed into every call and is never a submodule,
    so ``parameters()`` and ``state_dict()`` only cover trainable groups.
    Every group is built regardless of modality, so ablation runs with the
    same seed start from identical weights.
    """

    def __init__(
        self,
        backbone_spec: BackboneSpec,
        history_steps: int = HISTORY_STEPS,
        future_steps: int = FUTURE_STEPS,
        d_scene: int = 64,
        d_map: int = 64,
        map_widths: Sequence[int] = (16, 32, 64),
        raster_size: int = 100,
        prototypes: int = 32,
        adapter_dim: Optional[int] = None,
        fusion_heads: int = 4,
        use_neighbors: bool = True,
        use_map: bool = True,
        map_kv_mode: str = "grid",
        prompt_text: str = DEFAULT_PROMPT,
        seed: int = 0,
    ):
        super().__init__()
        self.backbone_spec = backbone_spec
        self.history_steps = history_steps
        self.future_steps = future_steps
        self.use_neighbors = use_neighbors
        self.use_map = use_map
        self.prompt_text = prompt_text
        d_llm = backbone_spec.d_llm

        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            self.scene_encoder = SceneEncoder(d_scene)
            self.map_encoder = MapEncoder(d_map, raster_size, widths=map_widths)
            self.adapter = ReprogrammingAdapter(d_scene, d_llm, backbone_spec.vocab_size, prototypes, adapter_dim)
            self.fusion = MapFusion(d_llm, d_map, fusion_heads, map_kv_mode)
            self.decoder = LinearDecoder(history_steps, future_steps, d_llm)

    def groups(self) -> Dict[str, nn.Module]:
        return {name: getattr(self, name) for name in TRAINABLE_GROUPS}

    def check_backbone(self, backbone: FrozenBackbone) -> None:
        spec = backbone.spec
        if (spec.d_llm, spec.vocab_size) != (self.backbone_spec.d_llm, self.backbone_spec.vocab_size):
            raise ConfigError(
                f"backbone {spec.identity} has d_llm={spec.d_llm}, V={spec.vocab_size}; predictor was built for "
                f"d_llm={self.backbone_spec.d_llm}, V={self.backbone_spec.vocab_size}"
            )

    def prompt_embeddings(self, backbone: FrozenBackbone) -> torch.Tensor:
        return backbone.embed_prompt(self.prompt_text, reserved=self.history_steps)

    def forward(
        self,
        batch: SceneBatch,
        backbone: FrozenBackbone,
        prompt: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        """Predicted (B, N, 2) ego-frame trajectories."""
        self.check_backbone(backbone)
        if batch.history_steps != self.history_steps:
            raise ConfigError(f"batch has {batch.history_steps} history steps, predictor expects {self.history_steps}")
        neighbor_history = batch.neighbor_history
        neighbor_present = batch.neighbor_present
        if not self.use_neighbors:
            neighbor_history = neighbor_history[:, :0]
            neighbor_present = neighbor_present[:, :0]

        features = self.scene_encoder(batch.ego_history, neighbor_history, neighbor_present)
        tokens = self.adapter(features, backbone.vocab_embeddings)

        if self.use_map:
            if batch.raster is None:
                raise ModalityError("map enabled but batch has no rasters", batch.scene_ids)
            fused = self.fusion(tokens, self.map_encoder(batch.raster))
        else:
            fused = tokens

        if prompt is None:
            prompt = self.prompt_embeddings(backbone)
        inputs, scene_positions = assemble_input(prompt, fused, backbone.spec.max_sequence_length)
        hidden = backbone(inputs)[:, scene_positions]
        return self.decoder(hidden)


def predict_batch(
    scenes: Sequence[Scene],
    predictor: TrajectoryPredictor,
    backbone: FrozenBackbone,
    prompt: Optional[torch.Tensor] = None,
) -> np.ndarray:
    """Ego-frame predictions (B, N, 2) for several scenes."""
    batch = collate_scenes(scenes, use_neighbors=predictor.use_neighbors, use_map=predictor.use_map)
    with torch.no_grad():
        return predictor(batch, backbone, prompt).numpy()


def predict(
    scene: Scene,
    predictor: TrajectoryPredictor,
    backbone: FrozenBackbone,
    prompt: Optional[torch.Tensor] = None,
) -> np.ndarray:
    """Ego-frame (N, 2) prediction for one scene."""
    return predict_batch([scene], predictor, backbone, prompt)[0]


def predict_world(
    scene: Scene,
    predictor: TrajectoryPredictor,
    backbone: FrozenBackbone,
    prompt: Optional[torch.Tensor] = None,
) -> np.ndarray:
    """World-frame (N, 2) prediction, using the pose recorded by normalization."""
    normalized = scene if scene.in_ego_frame else normalize_scene(scene)
    return to_world(predict(normalized, predictor, backbone, prompt), normalized)


def trainable_parameter_count(predictor: TrajectoryPredictor) -> Dict[str, int]:
    return {name: sum(p.numel() for p in group.parameters()) for name, group in predictor.groups().items()}
