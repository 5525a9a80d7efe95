"""
Write-only plot artifacts: scene overlays and ablation bar charts.
"""

import logging
import os
from typing import Mapping, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.transforms import Affine2D  # noqa: E402

from trajreason.errors import ConfigError  # noqa: E402
from trajreason.scenes.normalize import derive_heading  # noqa: E402
from trajreason.scenes.types import Scene  # noqa: E402

logger = logging.getLogger("trajreason.harness.plots")

# RGB per map channel, painted in this order
MAP_COLORS = {
    "drivable": (0.86, 0.86, 0.86),
    "intersection": (0.98, 0.91, 0.70),
    "lane_divider": (0.55, 0.55, 0.55),
}
PREDICTION_COLORS = ("tab:red", "tab:purple", "tab:orange", "tab:brown", "tab:pink", "tab:olive")

Predictions = Union[Sequence[np.ndarray], Mapping[str, np.ndarray]]


def _map_image(scene: Scene) -> np.ndarray:
    raster = scene.map_raster
    image = np.ones((raster.height, raster.width, 3))
    for name, color in MAP_COLORS.items():
        image[raster.channel(name).astype(bool)] = color
    return image


def _save(fig, path: str) -> str:
    try:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        fig.savefig(path, dpi=120, bbox_inches="tight")
    except OSError as e:
        raise ConfigError(f"cannot write plot to {path}: {e}") from e
    finally:
        plt.close(fig)
    return path


def scene_figure(scene: Scene, predictions: Optional[Predictions] = None, title: Optional[str] = None):
    """
    Build the figure for one scene: map, history, ground truth and each prediction.

    Predictions must be in the same frame as ``scene``; the frame is named
    in the title. Returns ``(fig, ax)``.
    """
    if predictions is None:
        labelled = []
    elif isinstance(predictions, Mapping):
        labelled = list(predictions.items())
    else:
        labelled = [(f"prediction {i + 1}", p) for i, p in enumerate(predictions)]

    frame = "ego frame" if scene.in_ego_frame else "world frame"
    fig, ax = plt.subplots(figsize=(6, 6))

    if scene.map_raster is not None:
        raster = scene.map_raster
        half_w = raster.width * raster.resolution / 2
        half_h = raster.height * raster.resolution / 2
        image = ax.imshow(
            _map_image(scene),
            origin="lower",
            extent=(-half_w, half_w, -half_h, half_h),
            interpolation="nearest",
        )
        if not scene.in_ego_frame:
            # the raster is stored ego-aligned; place it at the ego pose
            heading, _ = derive_heading(scene)
            ox, oy = scene.ego.positions[-1]
            image.set_transform(Affine2D().rotate(heading).translate(ox, oy) + ax.transData)

    for track in scene.neighbors:
        points = track.positions[track.present_mask]
        ax.plot(points[:, 0], points[:, 1], "o-", color="tab:gray", markersize=3, linewidth=1, alpha=0.8)
    if scene.neighbors:
        ax.plot([], [], "o-", color="tab:gray", markersize=3, linewidth=1, label="neighbors")

    history = scene.ego.positions
    ax.plot(history[:, 0], history[:, 1], "o-", color="tab:blue", markersize=4, label="history")
    if scene.future is not None:
        ax.plot(scene.future[:, 0], scene.future[:, 1], "s--", color="tab:green", markersize=3, label="ground truth")
    for i, (label, points) in enumerate(labelled):
        points = np.asarray(points, dtype=np.float64)
        color = PREDICTION_COLORS[i % len(PREDICTION_COLORS)]
        ax.plot(points[:, 0], points[:, 1], "^-", color=color, markersize=3, label=label)

    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title(f"{title or scene.id} ({frame})")
    ax.legend(loc="upper left", fontsize=8)
    return fig, ax


def render_scene_plot(
    scene: Scene,
    predictions: Optional[Predictions] = None,
    path: str = "scene.png",
    title: Optional[str] = None,
) -> str:
    """Write the scene figure to ``path`` (format from the extension)."""
    fig, _ = scene_figure(scene, predictions, title)
    _save(fig, path)
    logger.debug(f"Wrote scene plot {path}")
    return path


def render_ablation_plot(table, path: str) -> str:
    """Grouped bars of ADE/FDE means (with std whiskers) per row of an ablation table."""
    if not table.rows:
        raise ValueError("ablation table has no rows")
    first = table.rows[0][1]
    metrics = [("ADE", k) for k in first.ade] + [("FDE", k) for k in first.fde]
    n_rows = len(table.rows)
    width = 0.8 / n_rows
    x = np.arange(len(metrics))

    fig, ax = plt.subplots(figsize=(max(6, 1.5 * len(metrics)), 4))
    for i, (name, report) in enumerate(table.rows):
        values = [(report.ade if m == "ADE" else report.fde)[k] for m, k in metrics]
        means = [v[0] for v in values]
        stds = [v[1] for v in values]
        ax.bar(x + (i - (n_rows - 1) / 2) * width, means, width, yerr=stds, capsize=2, label=name)
    ax.set_xticks(x)
    ax.set_xticklabels([f"{m}({k})" for m, k in metrics])
    ax.set_ylabel("meters")
    ax.set_title(f"{table.study} comparison")
    ax.legend(fontsize=8)
    return _save(fig, path)
