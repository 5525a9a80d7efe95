"""
Model components: scene and map encoders, reprogramming adapter, frozen
backbones, fusion and decoding, and the end-to-end predictor.
"""

from trajreason.models.backbone import (
    BACKBONE_ALIASES,
    BackboneSpec,
    FrozenBackbone,
    HuggingFaceBackbone,
    ToyBackbone,
    create_backbone,
    embed_prompt,
    parameter_checksum,
)
from trajreason.models.batch import DTYPE, SceneBatch, collate_scenes
from trajreason.models.fusion_decoder import LinearDecoder, MapFusion, assemble_input, decode
from trajreason.models.map_encoder import MapEncoder, MapFeature, encode_map
from trajreason.models.pipeline import (
    DEFAULT_PROMPT,
    TRAINABLE_GROUPS,
    TrajectoryPredictor,
    predict,
    predict_batch,
    predict_world,
    trainable_parameter_count,
)
from trajreason.models.reprogramming_adapter import ReprogrammingAdapter, build_prototypes, reprogram
from trajreason.models.scene_encoder import (
    SceneEncoder,
    VectorizedStates,
    encode_scene,
    masked_softmax,
    vectorize,
    vectorize_tensors,
)

__all__ = [
    "DTYPE",
    "SceneBatch",
    "collate_scenes",
    "VectorizedStates",
    "vectorize",
    "vectorize_tensors",
    "masked_softmax",
    "SceneEncoder",
    "encode_scene",
    "MapEncoder",
    "MapFeature",
    "encode_map",
    "ReprogrammingAdapter",
    "build_prototypes",
    "reprogram",
    "BackboneSpec",
    "FrozenBackbone",
    "ToyBackbone",
    "HuggingFaceBackbone",
    "BACKBONE_ALIASES",
    "create_backbone",
    "embed_prompt",
    "parameter_checksum",
    "MapFusion",
    "LinearDecoder",
    "assemble_input",
    "decode",
    "TrajectoryPredictor",
    "TRAINABLE_GROUPS",
    "DEFAULT_PROMPT",
    "predict",
    "predict_batch",
    "predict_world",
    "trainable_parameter_count",
]
