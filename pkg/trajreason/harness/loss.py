"""
Training losses over predicted trajectories.
"""

import torch
import torch.nn.functional as F

from trajreason.errors import ConfigError


def trajectory_loss(pred: torch.Tensor, truth: torch.Tensor, kind: str = "mse") -> torch.Tensor:
    """
    Scalar loss over (..., N, 2) trajectories.

    ``mse`` is the mean squared Euclidean distance per point; ``smooth_l1``
    sums the per-coordinate Huber terms of a point and averages over points.
    """
    if pred.shape != truth.shape:
        raise ValueError(f"prediction {tuple(pred.shape)} and ground truth {tuple(truth.shape)} differ in shape")
    if kind == "mse":
        return ((pred - truth) ** 2).sum(dim=-1).mean()
    if kind == "smooth_l1":
        return F.smooth_l1_loss(pred, truth, reduction="none").sum(dim=-1).mean()
    raise ConfigError(f"Unknown loss: {kind}. Use mse or smooth_l1")
