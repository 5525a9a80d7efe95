"""
Scene data model.

Coordinates are meters. History tracks hold ``HISTORY_LENGTH`` raw positions
at t = -2.0, -1.5, ..., 0.0 s; the future holds ``FUTURE_STEPS`` points at
t = 0.5, ..., 6.0 s.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

SAMPLE_PERIOD_S = 0.5
HISTORY_STEPS = 4
HISTORY_LENGTH = HISTORY_STEPS + 1
FUTURE_STEPS = 12

MAP_CHANNELS = ("drivable", "lane_divider", "intersection")


def _optional_array_equal(a: Optional[np.ndarray], b: Optional[np.ndarray]) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return a.shape == b.shape and np.array_equal(a, b, equal_nan=True)


@dataclass(frozen=True, eq=False)
class Track:
    """Observed positions of one agent; absent timesteps hold NaN and are masked."""

    positions: np.ndarray
    present_mask: np.ndarray

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 2)
        mask = np.asarray(self.present_mask, dtype=bool).reshape(-1)
        if mask.shape[0] != positions.shape[0]:
            raise ValueError(
                f"present_mask length {mask.shape[0]} != positions length {positions.shape[0]}"
            )
        positions = np.where(mask[:, None], positions, np.nan)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "present_mask", mask)

    @classmethod
    def fully_observed(cls, positions) -> "Track":
        positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
        return cls(positions, np.ones(positions.shape[0], dtype=bool))

    def __len__(self) -> int:
        return self.positions.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Track):
            return NotImplemented
        return (
            np.array_equal(self.present_mask, other.present_mask)
            and _optional_array_equal(self.positions, other.positions)
        )


@dataclass(frozen=True)
class RasterConfig:
    """Ego-centered raster geometry; ``extent`` is the side length in meters."""

    extent: float = 50.0
    resolution: float = 0.5

    @property
    def size(self) -> int:
        return int(round(self.extent / self.resolution))


@dataclass(frozen=True, eq=False)
class MapRaster:
    """
    Three binary channels (drivable, lane dividers, intersections).

    Row index grows with ego-frame +y, column index with +x; the ego position
    falls in pixel (H // 2, W // 2).
    """

    channels: np.ndarray
    resolution: float
    extent: float

    def __post_init__(self):
        raw = np.asarray(self.channels)
        if raw.ndim != 3 or raw.shape[0] != len(MAP_CHANNELS):
            raise ValueError(f"map channels must be 3xHxW, got shape {raw.shape}")
        if not np.isin(raw, (0, 1)).all():
            raise ValueError("map cells must be 0 or 1")
        channels = raw.astype(np.uint8)
        object.__setattr__(self, "channels", channels)

    @property
    def height(self) -> int:
        return self.channels.shape[1]

    @property
    def width(self) -> int:
        return self.channels.shape[2]

    def channel(self, name: str) -> np.ndarray:
        return self.channels[MAP_CHANNELS.index(name)]

    def pixel_of(self, x: float, y: float) -> Tuple[int, int]:
        """(row, col) of the pixel holding an ego-frame point; may be out of bounds."""
        col = int(np.floor(x / self.resolution + self.width / 2))
        row = int(np.floor(y / self.resolution + self.height / 2))
        return row, col

    def contains(self, x: float, y: float, channel: str = "drivable") -> bool:
        row, col = self.pixel_of(x, y)
        if not (0 <= row < self.height and 0 <= col < self.width):
            return False
        return bool(self.channel(channel)[row, col])

    def __eq__(self, other) -> bool:
        if not isinstance(other, MapRaster):
            return NotImplemented
        return (
            self.resolution == other.resolution
            and self.extent == other.extent
            and np.array_equal(self.channels, other.channels)
        )


@dataclass(frozen=True, eq=False)
class Scene:
    """One prediction instance."""

    id: str
    ego: Track
    neighbors: Tuple[Track, ...] = ()
    heading: Optional[float] = None
    map_raster: Optional[MapRaster] = None
    future: Optional[np.ndarray] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(self.ego.present_mask):
            raise ValueError(f"scene {self.id}: ego must be present at every history timestamp")
        object.__setattr__(self, "neighbors", tuple(self.neighbors))
        if self.future is not None:
            object.__setattr__(
                self, "future", np.asarray(self.future, dtype=np.float64).reshape(-1, 2)
            )
        if self.heading is not None:
            object.__setattr__(self, "heading", float(self.heading))

    @property
    def kind(self) -> Optional[str]:
        return self.meta.get("kind")

    @property
    def in_ego_frame(self) -> bool:
        return self.meta.get("frame") == "ego"

    def with_neighbors(self, neighbors: Sequence[Track]) -> "Scene":
        return replace(self, neighbors=tuple(neighbors))

    def without_map(self) -> "Scene":
        return replace(self, map_raster=None)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scene):
            return NotImplemented
        return (
            self.id == other.id
            and self.ego == other.ego
            and len(self.neighbors) == len(other.neighbors)
            and all(a == b for a, b in zip(self.neighbors, other.neighbors))
            and self.heading == other.heading
            and self.map_raster == other.map_raster
            and _optional_array_equal(self.future, other.future)
            and self.meta == other.meta
        )


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint train/validation/test scene-id lists."""

    train: Tuple[str, ...]
    validation: Tuple[str, ...]
    test: Tuple[str, ...]
    split_seed: int

    def select(self, scenes, part: str):
        wanted = set(getattr(self, part))
        return [scene for scene in scenes if scene.id in wanted]
