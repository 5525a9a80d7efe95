"""
Scene JSONL reader and writer.

One JSON object per line::

    {"id": str,
     "ego": [[x, y], ...],                     # HISTORY_LENGTH points
     "neighbors": [[[x, y] | null, ...], ...], # null for absent timestamps
     "heading": float | null,
     "map": {"channels": 3xHxW of 0/1, "resolution": float, "extent": float} | null,
     "future": [[x, y], ...] | null,           # FUTURE_STEPS points
     "meta": {...}}                            # optional

Coordinates are meters in the frame the scene was saved in.
"""

import json
import logging
import math
import os
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from trajreason.errors import SchemaError
from trajreason.scenes.types import FUTURE_STEPS, HISTORY_LENGTH, MapRaster, Scene, Track

logger = logging.getLogger("trajreason.scenes.io")


def _points_to_json(points: np.ndarray, mask: Optional[np.ndarray] = None) -> List:
    rows = []
    for i, (x, y) in enumerate(points):
        if mask is not None and not mask[i]:
            rows.append(None)
        else:
            rows.append([float(x), float(y)])
    return rows


def scene_to_dict(scene: Scene) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "id": scene.id,
        "ego": _points_to_json(scene.ego.positions),
        "neighbors": [_points_to_json(n.positions, n.present_mask) for n in scene.neighbors],
        "heading": scene.heading,
        "map": None,
        "future": None if scene.future is None else _points_to_json(scene.future),
    }
    if scene.map_raster is not None:
        data["map"] = {
            "channels": scene.map_raster.channels.tolist(),
            "resolution": scene.map_raster.resolution,
            "extent": scene.map_raster.extent,
        }
    if scene.meta:
        data["meta"] = scene.meta
    return data


def _parse_points(value: Any, field: str, line: int, expected: int, allow_null: bool = False):
    if not isinstance(value, list):
        raise SchemaError(f"expected a list of points, got {type(value).__name__}", line, field)
    if len(value) != expected:
        raise SchemaError(f"{field.split('[')[0]} length {len(value)}, expected {expected}", line, field)
    positions = np.full((expected, 2), np.nan)
    mask = np.zeros(expected, dtype=bool)
    for i, point in enumerate(value):
        if point is None:
            if not allow_null:
                raise SchemaError(f"point {i} is null", line, field)
            continue
        if (
            not isinstance(point, list)
            or len(point) != 2
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in point)
        ):
            raise SchemaError(f"point {i} is not a pair of numbers", line, field)
        if not all(math.isfinite(c) for c in point):
            raise SchemaError(f"point {i} is not finite", line, field)
        positions[i] = point
        mask[i] = True
    return positions, mask


def scene_from_dict(
    data: Any,
    line: int = None,
    history_length: int = HISTORY_LENGTH,
    future_steps: int = FUTURE_STEPS,
) -> Scene:
    if not isinstance(data, dict):
        raise SchemaError("record must be a JSON object", line)
    for key in ("id", "ego"):
        if key not in data:
            raise SchemaError("missing required key", line, key)
    if not isinstance(data["id"], str):
        raise SchemaError("id must be a string", line, "id")

    ego, _ = _parse_points(data["ego"], "ego", line, history_length)

    raw_neighbors = data.get("neighbors") or []
    if not isinstance(raw_neighbors, list):
        raise SchemaError("neighbors must be a list", line, "neighbors")
    neighbors = []
    for i, raw in enumerate(raw_neighbors):
        positions, mask = _parse_points(raw, f"neighbors[{i}]", line, history_length, allow_null=True)
        neighbors.append(Track(positions, mask))

    heading = data.get("heading")
    if heading is not None and (isinstance(heading, bool) or not isinstance(heading, (int, float))):
        raise SchemaError("heading must be a number or null", line, "heading")

    raster = None
    raw_map = data.get("map")
    if raw_map is not None:
        if not isinstance(raw_map, dict) or not {"channels", "resolution", "extent"} <= set(raw_map):
            raise SchemaError("map must hold channels, resolution and extent", line, "map")
        try:
            channels = np.asarray(raw_map["channels"])
            if channels.dtype.kind not in "biuf" or not np.isin(channels, (0, 1)).all():
                raise ValueError("map cells must be 0 or 1")
            raster = MapRaster(
                channels=channels,
                resolution=float(raw_map["resolution"]),
                extent=float(raw_map["extent"]),
            )
        except (TypeError, ValueError) as e:
            raise SchemaError(str(e), line, "map") from e

    future = None
    if data.get("future") is not None:
        future, _ = _parse_points(data["future"], "future", line, future_steps)

    meta = data.get("meta") or {}
    if not isinstance(meta, dict):
        raise SchemaError("meta must be an object", line, "meta")

    return Scene(
        id=data["id"],
        ego=Track.fully_observed(ego),
        neighbors=tuple(neighbors),
        heading=heading,
        map_raster=raster,
        future=future,
        meta=meta,
    )


def save_scenes(scenes: Iterable[Scene], path: str) -> int:
    """Write scenes as JSONL; returns the number written."""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    count = 0
    with open(path, "w") as f:
        for scene in scenes:
            f.write(json.dumps(scene_to_dict(scene), separators=(",", ":")) + "\n")
            count += 1
    logger.info(f"Saved {count} scenes to {path}")
    return count


def load_scenes(
    path: str,
    history_length: int = HISTORY_LENGTH,
    future_steps: int = FUTURE_STEPS,
) -> List[Scene]:
    """Read a scene JSONL file; blank lines are skipped."""
    scenes = []
    with open(path) as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(f"invalid JSON: {e.msg}", line_no) from e
            scenes.append(scene_from_dict(data, line_no, history_length, future_steps))
    logger.debug(f"Loaded {len(scenes)} scenes from {path}")
    return scenes
