"""
Map cross-attention fusion, backbone input assembly and the linear
trajectory decoder.
"""

from typing import Optional, Tuple, Union

import torch
import torch.nn as nn

from trajreason.errors import ConfigError
from trajreason.models.batch import DTYPE
from trajreason.models.map_encoder import MapFeature

MAP_KV_MODES = ("grid", "pooled")


class MapFusion(nn.Module):
    """
    Scene tokens attend over map tokens; the result is concatenated with the
    scene token and mapped back to ``d_llm`` per timestep.
    """

    def __init__(self, d_llm: int, d_map: int, heads: int = 4, kv_mode: str = "grid"):
        super().__init__()
        if kv_mode not in MAP_KV_MODES:
            raise ConfigError(f"map_kv_mode must be one of {MAP_KV_MODES}, got '{kv_mode}'")
        if d_llm % heads:
            raise ConfigError(f"d_llm={d_llm} is not divisible by fusion heads={heads}")
        self.d_llm = d_llm
        self.d_map = d_map
        self.kv_mode = kv_mode
        self.map_proj = nn.Linear(d_map, d_llm)
        self.attention = nn.MultiheadAttention(d_llm, heads, batch_first=True)
        self.fuse_linear = nn.Linear(2 * d_llm, d_llm)
        self.to(DTYPE)

    def map_keys(self, map_feature: MapFeature, kv_mode: Optional[str] = None) -> torch.Tensor:
        mode = kv_mode or self.kv_mode
        if mode == "pooled":
            return self.map_proj(map_feature.pooled).unsqueeze(-2)
        if mode == "grid":
            return self.map_proj(map_feature.grid_tokens)
        raise ConfigError(f"map_kv_mode must be one of {MAP_KV_MODES}, got '{mode}'")

    def cross_attend_map(
        self,
        scene_tokens: torch.Tensor,
        map_feature: MapFeature,
        kv_mode: Optional[str] = None,
        return_weights: bool = False,
    ) -> Union[torch.Tensor, Tuple[torch.Tensor, torch.Tensor]]:
        """(B, T, d_llm) queries against (B, G, d_llm) or (B, 1, d_llm) map keys/values."""
        keys = self.map_keys(map_feature, kv_mode)
        attended, weights = self.attention(
            scene_tokens, keys, keys, need_weights=return_weights, average_attn_weights=False
        )
        return (attended, weights) if return_weights else attended

    def fuse(self, attended_map: torch.Tensor, scene_tokens: torch.Tensor) -> torch.Tensor:
        if attended_map.shape != scene_tokens.shape:
            raise ConfigError(
                f"attended map {tuple(attended_map.shape)} and scene tokens "
                f"{tuple(scene_tokens.shape)} differ in shape"
            )
        return self.fuse_linear(torch.cat([attended_map, scene_tokens], dim=-1))

    def forward(self, scene_tokens: torch.Tensor, map_feature: MapFeature) -> torch.Tensor:
        return self.fuse(self.cross_attend_map(scene_tokens, map_feature), scene_tokens)


def assemble_input(
    prompt_embeddings: torch.Tensor,
    fused: torch.Tensor,
    max_length: Optional[int] = None,
) -> Tuple[torch.Tensor, slice]:
    """
    Lay out ``[prompt ; f_1..f_T]``.

    ``fused`` is (T, d) or (B, T, d); the prompt (P, d) is shared across the
    batch. Returns the sequence and the slice of the scene positions.
    """
    prompt_len = prompt_embeddings.shape[0]
    total = prompt_len + fused.shape[-2]
    if max_length is not None and total > max_length:
        raise ConfigError(f"assembled input has {total} positions, backbone allows {max_length}")
    prompt = prompt_embeddings.to(fused.dtype)
    if fused.dim() == 3:
        prompt = prompt.unsqueeze(0).expand(fused.shape[0], -1, -1)
    return torch.cat([prompt, fused], dim=-2), slice(prompt_len, total)


class LinearDecoder(nn.Module):
    """Affine map from the flattened T x d_llm hidden states to N x 2 points."""

    def __init__(self, history_steps: int, future_steps: int, d_llm: int):
        super().__init__()
        self.history_steps = history_steps
        self.future_steps = future_steps
        self.d_llm = d_llm
        self.linear = nn.Linear(history_steps * d_llm, 2 * future_steps)
        nn.init.zeros_(self.linear.bias)
        self.to(DTYPE)

    def forward(self, hidden: torch.Tensor) -> torch.Tensor:
        expected = (self.history_steps, self.d_llm)
        if tuple(hidden.shape[-2:]) != expected:
            raise ConfigError(f"decoder expects {expected} hidden states, got {tuple(hidden.shape[-2:])}")
        flat = hidden.reshape(*hidden.shape[:-2], -1)
        return self.linear(flat).reshape(*hidden.shape[:-2], self.future_steps, 2)


def decode(hidden: torch.Tensor, decoder: LinearDecoder) -> torch.Tensor:
    return decoder(hidden)
