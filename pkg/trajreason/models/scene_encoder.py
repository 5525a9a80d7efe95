"""
Scene encoder: per-timestep vectorization of agent states, ego-to-neighbor
cross-attention, and gated fusion into one feature vector per timestep.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import torch
import torch.nn as nn

from trajreason.models.batch import DTYPE, collate_scenes
from trajreason.scenes.types import Scene


@dataclass
class VectorizedStates:
    """States of all agents of one scene; agent 0 is the ego."""

    states: np.ndarray  # (A, T, 4): [dx, dy, rel_x, rel_y]
    mask: np.ndarray    # (A, T): True where the agent has a valid predecessor


def vectorize_tensors(
    ego_history: torch.Tensor,
    neighbor_history: torch.Tensor,
    neighbor_present: torch.Tensor,
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """
    Build the 4-vector [x_t - x_{t-1}; x_t - x_t^ego] for t = 1..T.

    Returns ego states (B, T, 4), neighbor states (B, I, T, 4) and the
    neighbor validity mask (B, I, T).
    """
    ego_disp = ego_history[:, 1:] - ego_history[:, :-1]
    ego_states = torch.cat([ego_disp, torch.zeros_like(ego_disp)], dim=-1)

    nbr_disp = neighbor_history[:, :, 1:] - neighbor_history[:, :, :-1]
    nbr_rel = neighbor_history[:, :, 1:] - ego_history[:, None, 1:]
    nbr_states = torch.cat([nbr_disp, nbr_rel], dim=-1)
    nbr_valid = neighbor_present[:, :, 1:] & neighbor_present[:, :, :-1]
    nbr_states = nbr_states * nbr_valid[..., None].to(nbr_states.dtype)
    return ego_states, nbr_states, nbr_valid


def vectorize(scene: Scene) -> VectorizedStates:
    """Vectorized states of a normalized scene (ego first, then neighbors in order)."""
    batch = collate_scenes([scene], use_neighbors=True, use_map=False)
    ego, nbr, valid = vectorize_tensors(batch.ego_history, batch.neighbor_history, batch.neighbor_present)
    states = torch.cat([ego[:, None], nbr], dim=1)[0]
    ego_mask = torch.ones(1, ego.shape[1], dtype=torch.bool)
    mask = torch.cat([ego_mask, valid[0]], dim=0)
    # masked neighbor slots carry zeros in the state tensor
    return VectorizedStates(states=states.numpy(), mask=mask.numpy())


def masked_softmax(logits: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """
    Softmax over the last axis restricted to ``mask``.

    Rows without any valid entry get all-zero weights (and zero gradients).
    """
    has_any = mask.any(dim=-1, keepdim=True)
    safe_mask = mask | ~has_any
    weights = torch.softmax(logits.masked_fill(~safe_mask, float("-inf")), dim=-1)
    return weights * has_any.to(weights.dtype)


class SceneEncoder(nn.Module):
    """
    Encodes ego/neighbor tracks into T feature vectors of width ``d_scene``.

    Phi is a two-layer network 4 -> d_scene -> d_scene; W_Q, W_K, W_V are
    bias-free d_scene x d_scene projections; ``alpha`` gates the fusion of
    interaction features with the ego's own embedding.
    """

    def __init__(self, d_scene: int = 64):
        super().__init__()
        self.d_scene = d_scene
        self.phi = nn.Sequential(
            nn.Linear(4, d_scene),
            nn.GELU(),
            nn.Linear(d_scene, d_scene),
        )
        self.w_q = nn.Linear(d_scene, d_scene, bias=False)
        self.w_k = nn.Linear(d_scene, d_scene, bias=False)
        self.w_v = nn.Linear(d_scene, d_scene, bias=False)
        self.alpha = nn.Parameter(torch.zeros(d_scene))
        self.to(DTYPE)

    def encode_interactions(
        self,
        ego_states: torch.Tensor,
        neighbor_states: torch.Tensor,
        neighbor_valid: torch.Tensor,
        return_weights: bool = False,
    ):
        """
        Cross-attention from the ego (query) to valid neighbors (keys/values).

        Shapes: ego (B, T, 4), neighbors (B, I, T, 4), valid (B, I, T).
        Returns h' of shape (B, T, d_scene); zero where no neighbor is valid.
        """
        q = self.w_q(self.phi(ego_states))
        if neighbor_states.shape[1] == 0:
            h_prime = torch.zeros_like(q)
            weights = q.new_zeros(q.shape[0], q.shape[1], 0)
            return (h_prime, weights) if return_weights else h_prime

        nbr_features = self.phi(neighbor_states)
        k = self.w_k(nbr_features)
        v = self.w_v(nbr_features)
        logits = torch.einsum("btd,bitd->bti", q, k) / math.sqrt(self.d_scene)
        weights = masked_softmax(logits, neighbor_valid.permute(0, 2, 1))
        h_prime = torch.einsum("bti,bitd->btd", weights, v)
        return (h_prime, weights) if return_weights else h_prime

    @staticmethod
    def fuse_gate(h_prime: torch.Tensor, h_ego: torch.Tensor, alpha: torch.Tensor) -> torch.Tensor:
        # gates are sigmoid(alpha) and sigmoid(1 - alpha); they need not sum to 1
        return torch.sigmoid(alpha) * h_prime + torch.sigmoid(1.0 - alpha) * h_ego

    def forward(
        self,
        ego_history: torch.Tensor,
        neighbor_history: torch.Tensor,
        neighbor_present: torch.Tensor,
    ) -> torch.Tensor:
        ego_states, nbr_states, nbr_valid = vectorize_tensors(ego_history, neighbor_history, neighbor_present)
        h_prime = self.encode_interactions(ego_states, nbr_states, nbr_valid)
        h_ego = self.phi(ego_states)
        return self.fuse_gate(h_prime, h_ego, self.alpha)


def encode_scene(scene: Scene, encoder: SceneEncoder, use_neighbors: bool = True) -> np.ndarray:
    """Scene feature sequence (T, d_scene) of a single scene."""
    batch = collate_scenes([scene], use_neighbors=use_neighbors, use_map=False)
    with torch.no_grad():
        features = encoder(batch.ego_history, batch.neighbor_history, batch.neighbor_present)
    return features[0].numpy()
