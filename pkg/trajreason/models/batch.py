"""
Collation of normalized scenes into padded float64 tensors.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import torch

from trajreason.errors import ConfigError, ModalityError, SchemaError
from trajreason.scenes.normalize import normalize_scene
from trajreason.scenes.types import Scene

DTYPE = torch.float64


@dataclass
class SceneBatch:
    """
    Padded tensors for B scenes with I neighbor slots and L = T + 1 raw steps.

    Absent neighbor positions are zero-filled; ``neighbor_present`` is the
    only source of truth for availability.
    """

    scene_ids: List[str]
    ego_history: torch.Tensor        # (B, L, 2)
    neighbor_history: torch.Tensor   # (B, I, L, 2)
    neighbor_present: torch.Tensor   # (B, I, L) bool
    raster: Optional[torch.Tensor]   # (B, 3, H, W)
    future: Optional[torch.Tensor]   # (B, N, 2)

    def __len__(self) -> int:
        return len(self.scene_ids)

    @property
    def history_steps(self) -> int:
        return self.ego_history.shape[1] - 1

    def index(self, indices: Sequence[int]) -> "SceneBatch":
        idx = torch.as_tensor(list(indices), dtype=torch.long)
        return SceneBatch(
            scene_ids=[self.scene_ids[i] for i in idx.tolist()],
            ego_history=self.ego_history[idx],
            neighbor_history=self.neighbor_history[idx],
            neighbor_present=self.neighbor_present[idx],
            raster=None if self.raster is None else self.raster[idx],
            future=None if self.future is None else self.future[idx],
        )


def collate_scenes(
    scenes: Sequence[Scene],
    use_neighbors: bool = True,
    use_map: bool = True,
    require_future: bool = False,
) -> SceneBatch:
    """
    Stack scenes into a :class:`SceneBatch`, normalizing any scene still in the world frame.

    With ``use_neighbors=False`` the neighbor lists are emptied; with
    ``use_map=False`` rasters are dropped. Missing rasters under
    ``use_map=True`` raise :class:`ModalityError` naming the scenes.
    """
    if not scenes:
        raise ValueError("cannot collate an empty scene list")
    scenes = [s if s.in_ego_frame else normalize_scene(s) for s in scenes]

    if use_map:
        missing = [s.id for s in scenes if s.map_raster is None]
        if missing:
            raise ModalityError("map enabled but scenes have no map raster", missing)
    if require_future:
        missing = [s.id for s in scenes if s.future is None]
        if missing:
            raise ModalityError("scenes have no ground-truth future", missing)

    lengths = {len(s.ego) for s in scenes}
    if len(lengths) != 1:
        raise SchemaError(f"scenes disagree on history length: {sorted(lengths)}")
    length = lengths.pop()
    batch = len(scenes)
    slots = max((len(s.neighbors) for s in scenes), default=0) if use_neighbors else 0

    ego = np.stack([s.ego.positions for s in scenes])
    neighbors = np.zeros((batch, slots, length, 2))
    present = np.zeros((batch, slots, length), dtype=bool)
    if slots:
        for b, scene in enumerate(scenes):
            for i, track in enumerate(scene.neighbors):
                present[b, i] = track.present_mask
                neighbors[b, i] = np.where(track.present_mask[:, None], track.positions, 0.0)

    raster = None
    if use_map:
        shapes = {s.map_raster.channels.shape for s in scenes}
        if len(shapes) != 1:
            raise ConfigError(f"scenes disagree on raster shape: {sorted(shapes)}")
        raster = torch.as_tensor(np.stack([s.map_raster.channels for s in scenes]), dtype=DTYPE)

    future = None
    if all(s.future is not None for s in scenes):
        future = torch.as_tensor(np.stack([s.future for s in scenes]), dtype=DTYPE)

    return SceneBatch(
        scene_ids=[s.id for s in scenes],
        ego_history=torch.as_tensor(ego, dtype=DTYPE),
        neighbor_history=torch.as_tensor(neighbors, dtype=DTYPE),
        neighbor_present=torch.as_tensor(present),
        raster=raster,
        future=future,
    )
