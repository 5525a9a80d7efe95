"""
Displacement metrics (ADE, FDE), miss rate, inference efficiency and
their aggregation into a :class:`MetricsReport`.

Trajectories are (N, 2) arrays in meters sampled every 0.5 s, so a horizon
of h seconds covers the first ``h / 0.5`` points.
"""

import csv
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from trajreason.errors import DataError
from trajreason.scenes.types import SAMPLE_PERIOD_S

logger = logging.getLogger("trajreason.metrics")

MISS_MODES = ("scene", "point")
DEFAULT_HORIZONS_S = (2, 4, 6)
DEFAULT_FDE_HORIZONS_S = (6,)
DEFAULT_MISS_THRESHOLD_M = 2.0


def horizon_key(seconds: float) -> str:
    """Report key of a horizon: ``2`` -> ``"2s"``, ``1.5`` -> ``"1.5s"``."""
    return f"{float(seconds):g}s"


def horizon_steps(seconds: float, period: float = SAMPLE_PERIOD_S) -> int:
    steps = seconds / period
    if steps < 1 or abs(steps - round(steps)) > 1e-9:
        raise ValueError(f"horizon {seconds}s is not a positive multiple of the {period}s sample period")
    return int(round(steps))


def _errors(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.ndim != 2 or pred.shape[1] != 2:
        raise ValueError(f"prediction {pred.shape} and ground truth {truth.shape} must both be (N, 2)")
    return np.linalg.norm(pred - truth, axis=1)


def _check_steps(steps: int, n: int) -> None:
    if not 1 <= steps <= n:
        raise ValueError(f"horizon_steps must be in [1, {n}], got {steps}")


def ade(pred: np.ndarray, truth: np.ndarray, horizon_steps: Optional[int] = None) -> float:
    """Mean Euclidean error over the first ``horizon_steps`` points (all by default)."""
    errors = _errors(pred, truth)
    steps = len(errors) if horizon_steps is None else horizon_steps
    _check_steps(steps, len(errors))
    return float(errors[:steps].mean())


def fde(pred: np.ndarray, truth: np.ndarray, horizon_steps: Optional[int] = None) -> float:
    """Euclidean error at the ``horizon_steps``-th point (the last by default)."""
    errors = _errors(pred, truth)
    steps = len(errors) if horizon_steps is None else horizon_steps
    _check_steps(steps, len(errors))
    return float(errors[steps - 1])


def miss_rate(
    pairs: Sequence[Tuple[np.ndarray, np.ndarray]],
    threshold: float = DEFAULT_MISS_THRESHOLD_M,
    mode: str = "scene",
    horizon_steps: Optional[int] = None,
) -> float:
    """
    Fraction of misses over ``(pred, truth)`` pairs.

    ``scene`` mode counts a scene as missed when its final displacement is
    strictly greater than ``threshold``; ``point`` mode is the fraction of
    all predicted points whose error exceeds it.
    """
    if not pairs:
        raise DataError("miss rate needs at least one scene")
    if mode == "scene":
        misses = [fde(p, t, horizon_steps) > threshold for p, t in pairs]
        return float(np.mean(misses))
    if mode == "point":
        errors = np.concatenate([_errors(p, t) for p, t in pairs])
        return float(np.mean(errors > threshold))
    raise ValueError(f"miss mode must be one of {MISS_MODES}, got '{mode}'")


def inference_efficiency(samples: Sequence[float], warmup: int = 0) -> float:
    """
    Mean seconds per scene, ignoring the first ``warmup`` samples.

    At least one sample always remains.
    """
    samples = list(samples)
    if not samples:
        raise DataError("inference efficiency needs at least one timing sample")
    skip = min(max(int(warmup), 0), len(samples) - 1)
    return float(np.mean(samples[skip:]))


@dataclass
class SceneResult:
    """Per-scene metric row; ``miss`` is 0/1 in scene mode, a point fraction in point mode."""

    scene_id: str
    ade: Dict[str, float]
    fde: Dict[str, float]
    miss: float
    kind: Optional[str] = None
    inference_s: Optional[float] = None


def score_scene(
    scene_id: str,
    pred: np.ndarray,
    truth: np.ndarray,
    horizons: Sequence[float] = DEFAULT_HORIZONS_S,
    fde_horizons: Sequence[float] = DEFAULT_FDE_HORIZONS_S,
    miss_threshold: float = DEFAULT_MISS_THRESHOLD_M,
    miss_mode: str = "scene",
    kind: Optional[str] = None,
    inference_s: Optional[float] = None,
) -> SceneResult:
    return SceneResult(
        scene_id=scene_id,
        ade={horizon_key(h): ade(pred, truth, horizon_steps(h)) for h in horizons},
        fde={horizon_key(h): fde(pred, truth, horizon_steps(h)) for h in fde_horizons},
        miss=miss_rate([(pred, truth)], miss_threshold, miss_mode),
        kind=kind,
        inference_s=inference_s,
    )


def _mean_std(values: Iterable[float]) -> Tuple[float, float]:
    values = np.asarray(list(values), dtype=np.float64)
    # population standard deviation
    return float(values.mean()), float(values.std(ddof=0))


@dataclass
class MetricsReport:
    ade: Dict[str, Tuple[float, float]]
    fde: Dict[str, Tuple[float, float]]
    miss_rate: float
    n_scenes: int
    inference_efficiency: Optional[float] = None
    per_scene: List[SceneResult] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ade": {k: [m, s] for k, (m, s) in self.ade.items()},
            "fde": {k: [m, s] for k, (m, s) in self.fde.items()},
            "mr": self.miss_rate,
            "ie_s": self.inference_efficiency,
            "n_scenes": self.n_scenes,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetricsReport":
        try:
            return cls(
                ade={k: (float(v[0]), float(v[1])) for k, v in data["ade"].items()},
                fde={k: (float(v[0]), float(v[1])) for k, v in data["fde"].items()},
                miss_rate=float(data["mr"]),
                inference_efficiency=None if data.get("ie_s") is None else float(data["ie_s"]),
                n_scenes=int(data["n_scenes"]),
            )
        except (KeyError, TypeError, IndexError) as e:
            raise DataError(f"malformed metrics report: {e}") from e

    def save_json(self, path: str) -> None:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def load_json(cls, path: str) -> "MetricsReport":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def save_csv(self, path: str) -> int:
        """One row per scene; returns the number of rows written."""
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        ade_keys = list(self.ade)
        fde_keys = list(self.fde)
        header = ["scene_id", "kind"] + [f"ade_{k}" for k in ade_keys] + [f"fde_{k}" for k in fde_keys]
        header += ["miss", "inference_s"]
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for row in self.per_scene:
                writer.writerow(
                    [row.scene_id, row.kind or ""]
                    + [repr(row.ade[k]) for k in ade_keys]
                    + [repr(row.fde[k]) for k in fde_keys]
                    + [repr(row.miss), "" if row.inference_s is None else repr(row.inference_s)]
                )
        return len(self.per_scene)

    def by_kind(self) -> Dict[str, "MetricsReport"]:
        """Re-aggregate the per-scene rows separately for every scenario kind."""
        kinds = sorted({row.kind or "unknown" for row in self.per_scene})
        return {
            kind: aggregate(
                [row for row in self.per_scene if (row.kind or "unknown") == kind],
                inference_efficiency=self.inference_efficiency,
            )
            for kind in kinds
        }


def aggregate(
    results: Sequence[SceneResult],
    inference_efficiency: Optional[float] = None,
) -> MetricsReport:
    """Mean and population std per horizon over per-scene results."""
    if not results:
        raise DataError("cannot aggregate zero scenes")
    ade_keys = list(results[0].ade)
    fde_keys = list(results[0].fde)
    for row in results[1:]:
        if list(row.ade) != ade_keys or list(row.fde) != fde_keys:
            raise DataError(
                f"scene {row.scene_id} has horizons ade={list(row.ade)} fde={list(row.fde)}, "
                f"expected ade={ade_keys} fde={fde_keys}"
            )
    return MetricsReport(
        ade={k: _mean_std(r.ade[k] for r in results) for k in ade_keys},
        fde={k: _mean_std(r.fde[k] for r in results) for k in fde_keys},
        miss_rate=float(np.mean([r.miss for r in results])),
        n_scenes=len(results),
        inference_efficiency=inference_efficiency,
        per_scene=list(results),
    )
