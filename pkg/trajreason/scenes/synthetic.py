"""
Synthetic driving scenarios: straight, constant-curvature turn, and
stop-then-turn at an intersection.

Every scene is a pure function of (kind, seed, params). Geometry is built in
a local frame where the ego sits at the origin heading +x at t=0, then moved
to a random world pose.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
import yaml

from trajreason.errors import ConfigError
from trajreason.scenes.normalize import rotation_matrix
from trajreason.scenes.raster import rasterize_map
from trajreason.scenes.types import (
    FUTURE_STEPS,
    HISTORY_LENGTH,
    SAMPLE_PERIOD_S,
    RasterConfig,
    Scene,
    Track,
)

logger = logging.getLogger("trajreason.scenes.synthetic")

KINDS = ("straight", "turn", "intersection")

# Documented bounds: every configured range is clamped into these.
BOUNDS: Dict[str, Tuple[float, float]] = {
    "speed_range": (0.5, 30.0),              # m/s
    "curvature_range": (0.001, 0.05),        # 1/m, sign drawn separately
    "neighbor_count_range": (0, 6),
    "lane_width": (2.5, 4.5),                # m
    "turn_radius_range": (7.0, 40.0),        # m
    "approach_distance_range": (0.0, 40.0),  # m from ego to the junction entry
    "acceleration_range": (0.2, 5.0),        # m/s^2
    "neighbor_dropout": (0.0, 1.0),          # probability a neighbor appears late
    "world_extent": (0.0, 10000.0),          # m, half-width of the world origin box
}

# Map geometry is only built this far (arc length) around the ego.
GEOMETRY_REACH_M = 45.0
GEOMETRY_STEP_M = 0.25


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of the scenario generator; see ``BOUNDS`` for the legal ranges."""

    speed_range: Tuple[float, float] = (4.0, 12.0)
    curvature_range: Tuple[float, float] = (0.01, 0.04)
    neighbor_count_range: Tuple[int, int] = (0, 6)
    lane_width: float = 3.5
    turn_radius_range: Tuple[float, float] = (8.0, 14.0)
    approach_distance_range: Tuple[float, float] = (2.0, 10.0)
    acceleration_range: Tuple[float, float] = (1.0, 3.0)
    neighbor_dropout: float = 0.2
    world_extent: float = 500.0
    raster: RasterConfig = field(default_factory=RasterConfig)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GeneratorConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown generator config keys: {', '.join(unknown)}")
        values = dict(data)
        if "raster" in values and isinstance(values["raster"], Mapping):
            try:
                values["raster"] = RasterConfig(**values["raster"])
            except TypeError as e:
                raise ConfigError(f"invalid raster config: {e}") from e
        for name, value in list(values.items()):
            if isinstance(value, list):
                values[name] = tuple(value)
        return cls(**values).clamped()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def clamped(self) -> "GeneratorConfig":
        updates = {}
        for name, (lo, hi) in BOUNDS.items():
            value = getattr(self, name)
            if isinstance(value, tuple):
                a, b = sorted(min(max(v, lo), hi) for v in value)
                if name == "neighbor_count_range":
                    a, b = int(a), int(b)
                updates[name] = (a, b)
            else:
                updates[name] = min(max(value, lo), hi)
        return replace(self, **updates)


def load_generator_config(path: str) -> GeneratorConfig:
    with open(path) as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: generator config must be a mapping")
    return GeneratorConfig.from_dict(data)


class _Centerline:
    """Arc-length parametrized path in the local frame."""

    def __init__(self, point_fn: Callable[[np.ndarray], np.ndarray], heading_fn: Callable[[np.ndarray], np.ndarray]):
        self._point = point_fn
        self._heading = heading_fn

    def point(self, s) -> np.ndarray:
        return self._point(np.atleast_1d(np.asarray(s, dtype=np.float64)))

    def heading(self, s) -> np.ndarray:
        return self._heading(np.atleast_1d(np.asarray(s, dtype=np.float64)))

    def offset_point(self, s, lateral: float) -> np.ndarray:
        h = self.heading(s)
        normal = np.stack([-np.sin(h), np.cos(h)], axis=1)
        return self.point(s) + lateral * normal

    def polyline(self, s_min: float, s_max: float, lateral: float = 0.0) -> np.ndarray:
        n = max(int(math.ceil((s_max - s_min) / GEOMETRY_STEP_M)), 1)
        return self.offset_point(np.linspace(s_min, s_max, n + 1), lateral)

    def corridor(self, s_min: float, s_max: float, half_width: float) -> np.ndarray:
        left = self.polyline(s_min, s_max, half_width)
        right = self.polyline(s_min, s_max, -half_width)
        return np.concatenate([left, right[::-1]])


def _straight() -> _Centerline:
    return _Centerline(
        lambda s: np.stack([s, np.zeros_like(s)], axis=1),
        lambda s: np.zeros_like(s),
    )


def _arc(curvature: float) -> _Centerline:
    k = curvature

    def point(s):
        return np.stack([np.sin(k * s) / k, (1.0 - np.cos(k * s)) / k], axis=1)

    return _Centerline(point, lambda s: k * s)


def _junction_turn(entry: float, radius: float, side: float) -> _Centerline:
    """Straight approach along +x, quarter arc at ``entry``, straight exit along side*y."""
    arc_len = radius * math.pi / 2

    def point(s):
        u = np.clip(s - entry, 0.0, arc_len)
        phi = u / radius
        x = np.where(s <= entry, s, entry + radius * np.sin(phi))
        y = side * radius * (1.0 - np.cos(phi))
        beyond = np.maximum(s - entry - arc_len, 0.0)
        y = y + side * beyond
        return np.stack([x, y], axis=1)

    def heading(s):
        u = np.clip(s - entry, 0.0, arc_len)
        return side * u / radius

    return _Centerline(point, heading)


def _timestamps() -> Tuple[np.ndarray, np.ndarray]:
    history = (np.arange(HISTORY_LENGTH) - (HISTORY_LENGTH - 1)) * SAMPLE_PERIOD_S
    future = np.arange(1, FUTURE_STEPS + 1) * SAMPLE_PERIOD_S
    return history, future


def _uniform(rng: np.random.Generator, bounds: Tuple[float, float]) -> float:
    lo, hi = bounds
    return float(lo if hi <= lo else rng.uniform(lo, hi))


def _stop_then_go(t: np.ndarray, v0: float, t_stop: float, t_go: float, accel: float, v_cap: float) -> np.ndarray:
    """Arc length along the path: decelerate to rest at t_stop, wait, accelerate from t_go."""
    dec = v0 / (t_stop - t[0]) if t_stop > t[0] else 0.0
    s = np.zeros_like(t)
    before = t < t_stop
    s[before] = -0.5 * dec * (t_stop - t[before]) ** 2
    after = t > t_go
    dt = t[after] - t_go
    t_cap = v_cap / accel
    s[after] = np.where(
        dt <= t_cap,
        0.5 * accel * dt ** 2,
        0.5 * accel * t_cap ** 2 + v_cap * (dt - t_cap),
    )
    return s


def _presence(rng: np.random.Generator, dropout: float) -> np.ndarray:
    mask = np.ones(HISTORY_LENGTH, dtype=bool)
    if rng.random() < dropout:
        late = int(rng.integers(1, HISTORY_LENGTH - 1))
        mask[:late] = False
    return mask


class _SceneBuilder:
    """Collects local-frame geometry and tracks for one scene."""

    def __init__(self, kind: str, seed: int, params: GeneratorConfig):
        self.kind = kind
        self.seed = seed
        self.params = params
        entropy = [abs(int(seed)), int(seed < 0), KINDS.index(kind)]
        self.rng = np.random.default_rng(np.random.SeedSequence(entropy))
        self.history_t, self.future_t = _timestamps()
        self.lanes: List[np.ndarray] = []
        self.drivable: List[np.ndarray] = []
        self.intersections: List[np.ndarray] = []
        self.neighbors: List[Track] = []
        self.half_width = 1.5 * params.lane_width

    def build(self) -> Scene:
        rng = self.rng
        if self.kind == "straight":
            ego_hist, ego_future = self._build_straight()
        elif self.kind == "turn":
            ego_hist, ego_future = self._build_turn()
        else:
            ego_hist, ego_future = self._build_intersection()

        lo, hi = self.params.neighbor_count_range
        n_neighbors = int(rng.integers(lo, hi + 1))
        for _ in range(n_neighbors):
            self.neighbors.append(self._neighbor())

        theta = float(rng.uniform(-math.pi, math.pi))
        origin = rng.uniform(-self.params.world_extent, self.params.world_extent, size=2)
        rotation = rotation_matrix(theta)

        def world(points: np.ndarray) -> np.ndarray:
            return points @ rotation.T + origin

        ego_world = world(ego_hist)
        raster = rasterize_map(
            [world(p) for p in self.lanes],
            [world(p) for p in self.drivable],
            [world(p) for p in self.intersections],
            (float(ego_world[-1, 0]), float(ego_world[-1, 1]), theta),
            self.params.raster,
        )
        return Scene(
            id=f"{self.kind}-{self.seed}",
            ego=Track.fully_observed(ego_world),
            neighbors=tuple(Track(world(n.positions), n.present_mask) for n in self.neighbors),
            heading=theta,
            map_raster=raster,
            future=world(ego_future),
            meta={"kind": self.kind, "seed": int(self.seed)},
        )

    # -- ego paths ---------------------------------------------------------

    def _build_straight(self):
        speed = _uniform(self.rng, self.params.speed_range)
        self.path = _straight()
        self._follow_path_geometry()
        self._neighbor_speed = speed
        return (
            self.path.point(speed * self.history_t),
            self.path.point(speed * self.future_t),
        )

    def _build_turn(self):
        speed = _uniform(self.rng, self.params.speed_range)
        curvature = _uniform(self.rng, self.params.curvature_range)
        if self.rng.random() < 0.5:
            curvature = -curvature
        self.path = _arc(curvature)
        # cover the whole future while keeping the corridor shorter than one loop
        forward = max(GEOMETRY_REACH_M, speed * float(self.future_t[-1]) + 5.0)
        forward = min(forward, 0.95 * 2 * math.pi / abs(curvature) - GEOMETRY_REACH_M)
        self._follow_path_geometry(forward)
        self._neighbor_speed = speed
        return (
            self.path.point(speed * self.history_t),
            self.path.point(speed * self.future_t),
        )

    def _build_intersection(self):
        rng = self.rng
        p = self.params
        entry = _uniform(rng, p.approach_distance_range)
        radius = _uniform(rng, p.turn_radius_range)
        side = 1.0 if rng.random() < 0.5 else -1.0
        v0 = _uniform(rng, p.speed_range)
        accel = _uniform(rng, p.acceleration_range)
        t_stop = float(rng.uniform(-1.0, -0.5))
        t_go = float(rng.uniform(0.0, 1.0))
        self.path = _junction_turn(entry, radius, side)
        self._neighbor_speed = v0

        hw = self.half_width
        reach = GEOMETRY_REACH_M
        cross_x = entry + radius
        # approach road, crossing road, and the turning corridor joining them
        self.drivable.append(np.array([[-reach, -hw], [cross_x + hw, -hw], [cross_x + hw, hw], [-reach, hw]]))
        self.drivable.append(np.array([[cross_x - hw, -reach], [cross_x + hw, -reach], [cross_x + hw, reach], [cross_x - hw, reach]]))
        self.drivable.append(self.path.corridor(entry - 1.0, entry + radius * math.pi / 2 + 1.0, hw))
        self.intersections.append(np.array([[cross_x - hw, -hw], [cross_x + hw, -hw], [cross_x + hw, hw], [cross_x - hw, hw]]))
        half_lane = p.lane_width / 2
        for y in (-half_lane, half_lane):
            self.lanes.append(np.array([[-reach, y], [cross_x - hw, y]]))
        for x in (cross_x - half_lane, cross_x + half_lane):
            self.lanes.append(np.array([[x, -reach], [x, -hw]]))
            self.lanes.append(np.array([[x, hw], [x, reach]]))
        self._cross_x = cross_x

        v_cap = max(p.speed_range[1], 0.5)
        s_hist = _stop_then_go(self.history_t, v0, t_stop, t_go, accel, v_cap)
        s_future = _stop_then_go(
            np.concatenate([self.history_t[:1], self.future_t]), v0, t_stop, t_go, accel, v_cap
        )[1:]
        return self.path.point(s_hist), self.path.point(s_future)

    def _follow_path_geometry(self, forward: float = GEOMETRY_REACH_M):
        back = GEOMETRY_REACH_M
        self.drivable.append(self.path.corridor(-back, forward, self.half_width))
        half_lane = self.params.lane_width / 2
        for lateral in (-half_lane, half_lane):
            self.lanes.append(self.path.polyline(-back, forward, lateral))

    # -- neighbors ---------------------------------------------------------

    def _neighbor(self) -> Track:
        rng = self.rng
        p = self.params
        mask = _presence(rng, p.neighbor_dropout)
        speed = max(self._neighbor_speed + float(rng.uniform(-2.0, 2.0)), 0.0)

        if self.kind == "intersection" and rng.random() < 0.5:
            # crossing traffic on the perpendicular road
            lane_x = self._cross_x + (p.lane_width / 2 if rng.random() < 0.5 else -p.lane_width / 2)
            direction = 1.0 if lane_x > self._cross_x else -1.0
            start = float(rng.uniform(-35.0, -10.0))
            y = direction * (start + speed * (self.history_t + 2.0))
            positions = np.stack([np.full_like(y, lane_x), y], axis=1)
            return Track(positions, mask)

        lateral = p.lane_width * float(rng.choice([-1.0, 0.0, 1.0]))
        gap = float(rng.uniform(6.0, 25.0)) * (1.0 if rng.random() < 0.5 else -1.0)
        s = gap + speed * self.history_t
        path = _straight() if self.kind == "intersection" else self.path
        return Track(path.offset_point(s, lateral), mask)


def generate_synthetic_scene(kind: str, seed: int, params: Optional[GeneratorConfig] = None) -> Scene:
    """
    Build one synthetic scene in the world frame.

    ``kind`` is one of ``straight``, ``turn``, ``intersection``. The result is
    deterministic for fixed (kind, seed, params).
    """
    if kind not in KINDS:
        raise ValueError(f"Unknown scene kind: {kind}; expected one of {', '.join(KINDS)}")
    params = (params or GeneratorConfig()).clamped()
    return _SceneBuilder(kind, seed, params).build()


def _generate_one(job: Tuple[str, int, GeneratorConfig]) -> Scene:
    return generate_synthetic_scene(*job)


def generate_dataset(
    count: int,
    seed: int = 0,
    mix: Optional[Mapping[str, float]] = None,
    params: Optional[GeneratorConfig] = None,
    workers: int = 1,
) -> List[Scene]:
    """
    Generate ``count`` scenes with kinds drawn from ``mix`` (weights per kind).

    Scene i uses seed ``seed * 1_000_000 + i``, so datasets are reproducible
    and ids are unique.
    """
    mix = dict(mix or {kind: 1.0 for kind in KINDS})
    unknown = sorted(set(mix) - set(KINDS))
    if unknown:
        raise ConfigError(f"unknown scene kinds in mix: {', '.join(unknown)}")
    kinds = sorted(mix)
    weights = np.array([mix[k] for k in kinds], dtype=np.float64)
    if np.any(weights < 0) or weights.sum() <= 0:
        raise ConfigError("scene mix weights must be non-negative with a positive sum")
    weights = weights / weights.sum()

    params = (params or GeneratorConfig()).clamped()
    rng = np.random.default_rng(abs(int(seed)))
    drawn = rng.choice(len(kinds), size=count, p=weights)
    jobs = [(kinds[k], seed * 1_000_000 + i, params) for i, k in enumerate(drawn)]

    logger.info(f"Generating {count} synthetic scenes (seed={seed}, workers={workers})")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_generate_one, jobs, chunksize=max(1, count // (4 * workers))))
    return [_generate_one(job) for job in jobs]
