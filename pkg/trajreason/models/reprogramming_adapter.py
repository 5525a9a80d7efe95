"""
Reprogramming adapter: expresses scene features as attention-weighted
compositions of prototypes built from the frozen vocabulary table.
"""

import math
from typing import Optional, Tuple, Union

import torch
import torch.nn as nn

from trajreason.errors import ConfigError
from trajreason.models.batch import DTYPE


class ReprogrammingAdapter(nn.Module):
    """
    Single-head prototype cross-attention from ``d_scene`` into ``d_llm``.

    ``mapping`` is the learnable P x V combination map; prototypes are
    ``mapping.weight @ vocab`` and are recomputed on every call.
    """

    def __init__(
        self,
        d_scene: int,
        d_llm: int,
        vocab_size: int,
        prototypes: int = 32,
        d_adapter: Optional[int] = None,
    ):
        super().__init__()
        if prototypes < 1:
            raise ConfigError(f"prototype count must be positive, got {prototypes}")
        self.d_scene = d_scene
        self.d_llm = d_llm
        self.vocab_size = vocab_size
        self.n_prototypes = prototypes
        self.d_adapter = d_adapter or d_llm

        self.mapping = nn.Linear(vocab_size, prototypes, bias=False)
        self.query = nn.Linear(d_scene, self.d_adapter)
        self.key = nn.Linear(d_llm, self.d_adapter)
        self.value = nn.Linear(d_llm, self.d_adapter)
        self.out = nn.Linear(self.d_adapter, d_llm)
        self.to(DTYPE)

    def build_prototypes(self, vocab: torch.Tensor) -> torch.Tensor:
        """(P, d_llm) prototype bank; ``vocab`` is only read."""
        if tuple(vocab.shape) != (self.vocab_size, self.d_llm):
            raise ConfigError(
                f"vocabulary table {tuple(vocab.shape)} does not match adapter "
                f"(V={self.vocab_size}, d_llm={self.d_llm})"
            )
        return self.mapping.weight @ vocab

    def reprogram(
        self,
        scene_features: torch.Tensor,
        bank: torch.Tensor,
        return_weights: bool = False,
    ) -> Union[torch.Tensor, Tuple[torch.Tensor, torch.Tensor]]:
        """
        Map (..., T, d_scene) features to (..., T, d_llm) scene tokens.

        Each timestep attends independently over the P prototypes.
        """
        if scene_features.shape[-1] != self.d_scene:
            raise ConfigError(f"scene features have width {scene_features.shape[-1]}, expected {self.d_scene}")
        q = self.query(scene_features)
        k = self.key(bank)
        v = self.value(bank)
        weights = torch.softmax(q @ k.transpose(0, 1) / math.sqrt(self.d_adapter), dim=-1)
        tokens = self.out(weights @ v)
        return (tokens, weights) if return_weights else tokens

    def forward(self, scene_features: torch.Tensor, vocab: torch.Tensor) -> torch.Tensor:
        return self.reprogram(scene_features, self.build_prototypes(vocab))


def build_prototypes(vocab: torch.Tensor, adapter: ReprogrammingAdapter) -> torch.Tensor:
    return adapter.build_prototypes(vocab)


def reprogram(scene_features: torch.Tensor, bank: torch.Tensor, adapter: ReprogrammingAdapter) -> torch.Tensor:
    return adapter.reprogram(scene_features, bank)
