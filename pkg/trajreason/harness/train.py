"""
Training loop over the trainable parameter groups with a frozen backbone.
"""

import logging
import math
from typing import Iterator, List, Optional, Sequence

import numpy as np
import torch

from trajreason.errors import DataError, DivergenceError, FrozenContractError
from trajreason.harness.checkpoint import Checkpoint, backbone_identity, save_checkpoint
from trajreason.harness.config import TrainConfig
from trajreason.harness.factory import build_backbone, build_predictor, load_dataset, split_scenes
from trajreason.harness.loss import trajectory_loss
from trajreason.models.backbone import FrozenBackbone
from trajreason.models.batch import SceneBatch, collate_scenes
from trajreason.scenes.types import Scene
from trajreason.telemetry import get_telemetry, trace_run

logger = logging.getLogger("trajreason.harness.train")


def _minibatches(n: int, batch_size: int, generator: torch.Generator) -> Iterator[torch.Tensor]:
    """Endless stream of index batches; each epoch is a fresh permutation."""
    if batch_size >= n:
        everything = torch.arange(n)
        while True:
            yield everything
    while True:
        order = torch.randperm(n, generator=generator)
        for start in range(0, n - batch_size + 1, batch_size):
            yield order[start:start + batch_size]


def _scheduler(optimizer: torch.optim.Optimizer, config: TrainConfig):
    steps = max(config.optimizer.steps, 1)
    if config.optimizer.schedule == "cosine":
        return torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=steps)
    return torch.optim.lr_scheduler.LambdaLR(optimizer, lambda _: 1.0)


def train_on_scenes(
    config: TrainConfig,
    scenes: Sequence[Scene],
    backbone: Optional[FrozenBackbone] = None,
) -> Checkpoint:
    """
    Fit the trainable groups to ``scenes`` (all of them are training data).

    Deterministic for a fixed ``(config, scenes)``. Raises
    :class:`DivergenceError` on a non-finite loss and
    :class:`FrozenContractError` if the backbone changed.
    """
    if not scenes:
        raise DataError("no training scenes")
    backbone = backbone or build_backbone(config)
    checksum = backbone.parameter_checksum()
    predictor = build_predictor(config, backbone.spec)
    predictor.check_backbone(backbone)
    predictor.train()

    batch: SceneBatch = collate_scenes(
        scenes,
        use_neighbors=config.modality.use_neighbors,
        use_map=config.modality.use_map,
        require_future=True,
    )
    opt = config.optimizer
    optimizer = torch.optim.Adam(
        predictor.parameters(),
        lr=opt.step_size,
        betas=(opt.beta1, opt.beta2),
        eps=opt.eps,
    )
    scheduler = _scheduler(optimizer, config)
    generator = torch.Generator().manual_seed(abs(int(config.seed)))
    batches = _minibatches(len(batch), opt.batch_size, generator)
    prompt = predictor.prompt_embeddings(backbone)
    max_norm = opt.grad_clip if opt.grad_clip > 0 else math.inf

    telemetry = get_telemetry()
    log_every = max(config.telemetry.log_every, 1)
    loss_history: List[float] = []
    logger.info(
        f"Training {config.modality.name} on {len(batch)} scenes for {opt.steps} steps "
        f"(backbone={backbone.spec.identity}, seed={config.seed})"
    )

    for step in range(1, opt.steps + 1):
        lr = optimizer.param_groups[0]["lr"]
        with telemetry.start_span("train_step", "TRAIN_STEP", step=step, learning_rate=lr) as span:
            minibatch = batch.index(next(batches))
            pred = predictor(minibatch, backbone, prompt)
            loss = trajectory_loss(pred, minibatch.future, config.loss)
            value = float(loss.detach())
            if not math.isfinite(value):
                raise DivergenceError(step, value)
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            grad_norm = float(torch.nn.utils.clip_grad_norm_(predictor.parameters(), max_norm))
            optimizer.step()
            scheduler.step()
            span.loss = value
            span.grad_norm = grad_norm
        loss_history.append(value)
        if step % log_every == 0 or step == opt.steps:
            logger.info(f"step {step}/{opt.steps} loss={value:.6f} lr={lr:.2e}")

    predictor.eval()
    if backbone.parameter_checksum() != checksum:
        raise FrozenContractError(f"backbone {backbone.spec.identity} parameters changed during training")

    checkpoint = Checkpoint(
        predictor=predictor,
        config=config,
        backbone=backbone_identity(backbone, config.backbone.name),
        step=opt.steps,
        rng_state=generator.get_state().numpy().copy(),
        loss_history=loss_history,
    )
    if config.checkpoint_path:
        save_checkpoint(checkpoint, config.checkpoint_path)
    return checkpoint


@trace_run("train")
def train(
    config: TrainConfig,
    scenes: Optional[Sequence[Scene]] = None,
    backbone: Optional[FrozenBackbone] = None,
) -> Checkpoint:
    """Train on the configured dataset's training split."""
    config.validate()
    scenes = list(scenes) if scenes is not None else load_dataset(config)
    _, train_scenes, _, _ = split_scenes(config, scenes)
    return train_on_scenes(config, train_scenes, backbone)


def loss_window_means(loss_history: Sequence[float], window: int = 100) -> List[float]:
    """Mean loss over consecutive ``window``-step blocks."""
    values = np.asarray(loss_history, dtype=np.float64)
    blocks = len(values) // window
    return [float(values[i * window:(i + 1) * window].mean()) for i in range(blocks)]
