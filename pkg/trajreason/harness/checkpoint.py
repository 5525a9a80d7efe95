"""
Checkpoint archive: a zip holding ``manifest.json`` plus one ``.npy`` file
per trainable tensor.

Backbone weights are never stored. The manifest records the backbone
identity, seed and parameter checksum so the exact backbone can be rebuilt
and verified on load.
"""

import io
import json
import logging
import os
import zipfile
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import torch

from trajreason.errors import ConfigError, FrozenContractError
from trajreason.harness.config import TrainConfig
from trajreason.harness.factory import build_backbone, build_predictor
from trajreason.models.backbone import BackboneSpec, FrozenBackbone
from trajreason.models.pipeline import TRAINABLE_GROUPS, TrajectoryPredictor
from trajreason.telemetry import get_telemetry

logger = logging.getLogger("trajreason.harness.checkpoint")

FORMAT_VERSION = 1
MANIFEST = "manifest.json"


@dataclass
class Checkpoint:
    predictor: TrajectoryPredictor
    config: TrainConfig
    backbone: Dict[str, Any]
    step: int = 0
    rng_state: Optional[np.ndarray] = None
    loss_history: List[float] = field(default_factory=list)

    @property
    def final_loss(self) -> Optional[float]:
        return self.loss_history[-1] if self.loss_history else None

    @property
    def backbone_checksum(self) -> str:
        return self.backbone["checksum"]


def backbone_identity(backbone: FrozenBackbone, name: str) -> Dict[str, Any]:
    return {
        "name": name,
        "seed": backbone.seed,
        "spec": backbone.spec.to_dict(),
        "checksum": backbone.parameter_checksum(),
    }


def _npy_bytes(array: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    np.save(buffer, array, allow_pickle=False)
    return buffer.getvalue()


def save_checkpoint(checkpoint: Checkpoint, path: str) -> str:
    """Write ``checkpoint`` to ``path``; returns the path."""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)

    groups: Dict[str, Dict[str, Any]] = {name: {} for name in TRAINABLE_GROUPS}
    arrays: Dict[str, np.ndarray] = {}
    for key, tensor in checkpoint.predictor.state_dict().items():
        group, _, param = key.partition(".")
        array = tensor.detach().cpu().numpy()
        member = f"groups/{group}/{param}.npy"
        arrays[member] = array
        groups[group][param] = {"file": member, "shape": list(array.shape), "dtype": str(array.dtype)}

    if checkpoint.rng_state is not None:
        arrays["rng_state.npy"] = np.asarray(checkpoint.rng_state, dtype=np.uint8)

    manifest = {
        "format_version": FORMAT_VERSION,
        "config": checkpoint.config.to_dict(),
        "backbone": checkpoint.backbone,
        "step": checkpoint.step,
        "groups": groups,
        "rng_state": "rng_state.npy" if checkpoint.rng_state is not None else None,
        "loss_history": [float(v) for v in checkpoint.loss_history],
    }

    with get_telemetry().start_span("save_checkpoint", "CHECKPOINT", step=checkpoint.step) as span:
        span.set_attribute("path", path)
        with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as archive:
            archive.writestr(MANIFEST, json.dumps(manifest, indent=2))
            for member, array in arrays.items():
                archive.writestr(member, _npy_bytes(array))
    logger.info(f"Saved checkpoint step={checkpoint.step} to {path}")
    return path


def load_checkpoint(path: str) -> Checkpoint:
    """Rebuild the predictor from an archive written by :func:`save_checkpoint`."""
    if not os.path.exists(path):
        raise ConfigError(f"checkpoint not found: {path}")
    try:
        archive = zipfile.ZipFile(path)
    except zipfile.BadZipFile as e:
        raise ConfigError(f"{path} is not a checkpoint archive") from e

    with archive:
        try:
            manifest = json.loads(archive.read(MANIFEST))
        except KeyError as e:
            raise ConfigError(f"{path} has no {MANIFEST}") from e
        version = manifest.get("format_version")
        if version != FORMAT_VERSION:
            raise ConfigError(f"{path}: unsupported checkpoint format version {version}")

        config = TrainConfig.from_dict(manifest["config"])
        spec = BackboneSpec(**manifest["backbone"]["spec"])
        predictor = build_predictor(config, spec)

        state = {}
        for group, params in manifest["groups"].items():
            for param, entry in params.items():
                array = np.load(io.BytesIO(archive.read(entry["file"])), allow_pickle=False)
                if list(array.shape) != entry["shape"]:
                    raise ConfigError(f"{entry['file']}: shape {list(array.shape)}, manifest says {entry['shape']}")
                state[f"{group}.{param}"] = torch.from_numpy(array.copy())
        try:
            predictor.load_state_dict(state, strict=True)
        except RuntimeError as e:
            raise ConfigError(f"{path}: parameters do not match the stored config: {e}") from e

        rng_state = None
        if manifest.get("rng_state"):
            rng_state = np.load(io.BytesIO(archive.read(manifest["rng_state"])), allow_pickle=False)

    logger.debug(f"Loaded checkpoint {path} (step {manifest['step']})")
    return Checkpoint(
        predictor=predictor,
        config=config,
        backbone=manifest["backbone"],
        step=int(manifest["step"]),
        rng_state=rng_state,
        loss_history=list(manifest.get("loss_history", [])),
    )


def restore_backbone(checkpoint: Checkpoint) -> FrozenBackbone:
    """Rebuild the checkpoint's backbone and verify it is the one it was trained against."""
    backbone = build_backbone(checkpoint.config)
    verify_backbone(checkpoint, backbone)
    return backbone


def verify_backbone(checkpoint: Checkpoint, backbone: FrozenBackbone) -> None:
    checksum = backbone.parameter_checksum()
    if checksum != checkpoint.backbone_checksum:
        raise FrozenContractError(
            f"backbone {backbone.spec.identity} checksum {checksum[:12]} does not match "
            f"checkpoint {checkpoint.backbone_checksum[:12]}"
        )
