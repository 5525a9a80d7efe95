"""
Map encoder: a small strided CNN over the ego-centered raster producing a
grid of map tokens and their mean-pooled summary.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import torch
import torch.nn as nn

from trajreason.errors import ConfigError
from trajreason.models.batch import DTYPE
from trajreason.scenes.types import MAP_CHANNELS, MapRaster

logger = logging.getLogger("trajreason.models.map_encoder")


@dataclass
class MapFeature:
    """
    Output of :class:`MapEncoder`.

    ``grid_tokens`` is (B, G, d_map) in row-major cell order; ``pooled`` is
    (B, d_map) and always equals the token mean.
    """

    pooled: torch.Tensor
    grid_tokens: torch.Tensor

    @property
    def grid_size(self) -> int:
        return self.grid_tokens.shape[-2]


def _conv_output_size(size: int, stages: int) -> int:
    for _ in range(stages):
        size = (size + 2 - 3) // 2 + 1
    return size


class MapEncoder(nn.Module):
    """
    Three replicate-padded stride-2 convolutions with GELU, then a per-cell
    projection to ``d_map``.

    A 100x100 raster becomes a 13x13 grid (169 tokens).
    """

    def __init__(
        self,
        d_map: int = 64,
        raster_size: int = 100,
        in_channels: int = len(MAP_CHANNELS),
        widths: Sequence[int] = (16, 32, 64),
    ):
        super().__init__()
        if not widths:
            raise ConfigError("map encoder needs at least one convolution stage")
        self.d_map = d_map
        self.raster_size = raster_size
        self.in_channels = in_channels
        self.widths = tuple(widths)

        layers = []
        prev = in_channels
        for width in self.widths:
            layers.append(nn.Conv2d(prev, width, kernel_size=3, stride=2, padding=1, padding_mode="replicate"))
            layers.append(nn.GELU())
            prev = width
        self.convs = nn.Sequential(*layers)
        self.proj = nn.Linear(prev, d_map)
        self.to(DTYPE)

    @property
    def grid_shape(self) -> Tuple[int, int]:
        side = _conv_output_size(self.raster_size, len(self.widths))
        return side, side

    def forward(self, raster: torch.Tensor) -> MapFeature:
        expected = (self.in_channels, self.raster_size, self.raster_size)
        if raster.dim() != 4 or tuple(raster.shape[1:]) != expected:
            raise ConfigError(
                f"raster shape {tuple(raster.shape[1:]) if raster.dim() == 4 else tuple(raster.shape)} "
                f"does not match configured {expected} (channels, height, width)"
            )
        features = self.convs(raster.to(DTYPE))
        tokens = self.proj(features.flatten(2).transpose(1, 2))
        return MapFeature(pooled=tokens.mean(dim=1), grid_tokens=tokens)


def encode_map(raster: MapRaster, encoder: MapEncoder) -> MapFeature:
    """Encode one raster; the returned feature has no batch axis."""
    channels = torch.as_tensor(raster.channels, dtype=DTYPE)[None]
    with torch.no_grad():
        feature = encoder(channels)
    return MapFeature(pooled=feature.pooled[0], grid_tokens=feature.grid_tokens[0])
