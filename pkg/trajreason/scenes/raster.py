"""
Rasterization of vector map geometry into an ego-centered grid.
"""

import math
from typing import Iterable, Sequence, Tuple

import numpy as np
from matplotlib.path import Path

from trajreason.scenes.normalize import rotation_matrix
from trajreason.scenes.types import MAP_CHANNELS, MapRaster, RasterConfig

EgoPose = Tuple[float, float, float]


def _to_ego(points, ego_pose: EgoPose) -> np.ndarray:
    x, y, heading = ego_pose
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return (pts - np.array([x, y])) @ rotation_matrix(-heading).T


def _cell_centers(size: int, resolution: float) -> np.ndarray:
    coords = (np.arange(size) + 0.5 - size / 2) * resolution
    xs, ys = np.meshgrid(coords, coords)  # xs varies along columns, ys along rows
    return np.stack([xs.ravel(), ys.ravel()], axis=1)


def _fill_polygon(grid: np.ndarray, polygon: np.ndarray, centers: np.ndarray) -> None:
    if polygon.shape[0] < 3:
        return
    inside = Path(polygon).contains_points(centers)
    grid |= inside.reshape(grid.shape)

    # the ego pixel follows the ego point, not the pixel center
    if Path(polygon).contains_point((0.0, 0.0)):
        grid[grid.shape[0] // 2, grid.shape[1] // 2] = True


def _draw_polyline(grid: np.ndarray, polyline: np.ndarray, resolution: float) -> None:
    size_r, size_c = grid.shape
    step = resolution / 4.0
    for start, end in zip(polyline[:-1], polyline[1:]):
        length = float(np.hypot(*(end - start)))
        n = max(int(math.ceil(length / step)), 1)
        t = np.linspace(0.0, 1.0, n + 1)[:, None]
        samples = start + t * (end - start)
        cols = np.floor(samples[:, 0] / resolution + size_c / 2).astype(np.int64)
        rows = np.floor(samples[:, 1] / resolution + size_r / 2).astype(np.int64)
        keep = (rows >= 0) & (rows < size_r) & (cols >= 0) & (cols < size_c)
        grid[rows[keep], cols[keep]] = True


def rasterize_map(
    lane_polylines: Iterable[Sequence],
    drivable_polygons: Iterable[Sequence],
    intersection_polygons: Iterable[Sequence],
    ego_pose: EgoPose,
    config: RasterConfig = RasterConfig(),
) -> MapRaster:
    """
    Rasterize world-frame geometry around ``ego_pose`` = (x, y, heading).

    Polygons are filled by pixel-center inclusion; polylines are drawn with
    1-pixel strokes. Geometry outside the extent is cropped. Empty input
    yields an all-zero raster.
    """
    if config.resolution <= 0 or config.extent <= 0:
        raise ValueError("raster resolution and extent must be positive")

    size = config.size
    centers = _cell_centers(size, config.resolution)
    grids = {name: np.zeros((size, size), dtype=bool) for name in MAP_CHANNELS}

    for polygon in drivable_polygons:
        _fill_polygon(grids["drivable"], _to_ego(polygon, ego_pose), centers)
    for polygon in intersection_polygons:
        _fill_polygon(grids["intersection"], _to_ego(polygon, ego_pose), centers)
    for polyline in lane_polylines:
        _draw_polyline(grids["lane_divider"], _to_ego(polyline, ego_pose), config.resolution)

    channels = np.stack([grids[name] for name in MAP_CHANNELS]).astype(np.uint8)
    return MapRaster(channels=channels, resolution=config.resolution, extent=config.extent)
