"""
Ego-centric normalization and rigid transforms of scenes.
"""

import logging
import math
from dataclasses import replace
from typing import Tuple

import numpy as np

from trajreason.scenes.types import Scene, Track

logger = logging.getLogger("trajreason.scenes.normalize")

STATIONARY_EPS_M = 1e-3


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=np.float64)


def derive_heading(scene: Scene) -> Tuple[float, bool]:
    """
    Heading used for normalization and whether it is a fallback.

    A supplied heading wins; otherwise the direction of the last observed ego
    displacement, or 0.0 when that displacement is shorter than 1 mm.
    """
    if scene.heading is not None:
        return scene.heading, False
    delta = scene.ego.positions[-1] - scene.ego.positions[-2]
    if float(np.hypot(delta[0], delta[1])) < STATIONARY_EPS_M:
        logger.debug(f"scene {scene.id}: stationary ego, falling back to heading 0")
        return 0.0, True
    return math.atan2(delta[1], delta[0]), False


def _apply(points: np.ndarray, rotation: np.ndarray, translation: np.ndarray) -> np.ndarray:
    # row vectors: p' = R p + v
    return points @ rotation.T + translation


def _transform_track(track: Track, rotation: np.ndarray, translation: np.ndarray) -> Track:
    return Track(_apply(track.positions, rotation, translation), track.present_mask)


def transform_scene(scene: Scene, theta: float, translation=(0.0, 0.0)) -> Scene:
    """
    Apply a rigid motion to every position and add ``theta`` to the heading.

    The raster is stored in the ego frame and is left untouched.
    """
    rotation = rotation_matrix(theta)
    v = np.asarray(translation, dtype=np.float64)
    return replace(
        scene,
        ego=_transform_track(scene.ego, rotation, v),
        neighbors=tuple(_transform_track(n, rotation, v) for n in scene.neighbors),
        heading=None if scene.heading is None else scene.heading + theta,
        future=None if scene.future is None else _apply(scene.future, rotation, v),
    )


def normalize_scene(scene: Scene) -> Scene:
    """
    Express a scene in the ego frame.

    The ego position at t=0 becomes the origin and the ego heading points
    along +x. ``meta`` records the world pose (``origin``, ``rotation``) so
    predictions can be mapped back with :func:`to_world`.
    """
    heading, fallback = derive_heading(scene)
    origin = scene.ego.positions[-1].copy()
    rotation = rotation_matrix(-heading)
    shift = -(rotation @ origin)

    ego_positions = _apply(scene.ego.positions, rotation, shift)
    # exact origin regardless of rounding in the rotation
    ego_positions[-1] = 0.0

    meta = dict(scene.meta)
    if scene.in_ego_frame:
        # compose with the pose already recorded
        prev_rotation = float(meta.get("rotation", 0.0))
        prev_origin = np.asarray(meta.get("origin", [0.0, 0.0]), dtype=np.float64)
        origin = prev_origin + rotation_matrix(prev_rotation) @ origin
        heading = prev_rotation + heading
    meta.update(
        frame="ego",
        origin=[float(origin[0]), float(origin[1])],
        rotation=float(heading),
    )
    if fallback:
        meta["heading_fallback"] = True

    return replace(
        scene,
        ego=Track(ego_positions, scene.ego.present_mask),
        neighbors=tuple(_transform_track(n, rotation, shift) for n in scene.neighbors),
        heading=0.0,
        future=None if scene.future is None else _apply(scene.future, rotation, shift),
        meta=meta,
    )


def to_world(points: np.ndarray, scene: Scene) -> np.ndarray:
    """Map ego-frame points of a normalized scene back to the world frame."""
    if not scene.in_ego_frame:
        raise ValueError(f"scene {scene.id} is not in the ego frame")
    rotation = rotation_matrix(float(scene.meta["rotation"]))
    origin = np.asarray(scene.meta["origin"], dtype=np.float64)
    return _apply(np.asarray(points, dtype=np.float64), rotation, origin)
