"""Fusing text detections into the particle filter.

Injection (the headline method) replaces the lowest-weight particles with
particles drawn uniformly inside the detected tag's bounding box, headed
per the detecting camera's learned prior plus Gaussian noise, each with
weight 1/N. Consecutive detections of the same tag from the same camera do
not re-inject. Ablation variants relax or tighten that rule; SM1/SM2 fold
the text cue into the correction step as a multiplicative weight factor
instead of moving particles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import TWO_PI
from .mcl import ParticleSet, estimate_pose
from .textmap import TagRegion, TextLikelihoodMap

MODES = (
    "none",
    "inject_first",  # MCL+Text
    "inject_repeat",
    "inject_conservative",
    "seed_locations",
    "sm1",
    "sm2",
)


@dataclass(frozen=True)
class TextDetectionEvent:
    tag: str
    camera_id: int
    timestamp: float

    def __post_init__(self):
        if not self.tag:
            raise ValueError("tag must be non-empty")


@dataclass(frozen=True)
class SeedLocation:
    """Hand-authored injection point for the seed-locations ablation."""

    x: float
    y: float
    theta: float
    sigma_xy: float
    sigma_theta: float


@dataclass(frozen=True)
class StrategyConfig:
    mode: str = "none"
    rho: float = 0.5
    sigma_inject: float = 0.05  # radians on the injected heading
    sm1_w_in: float = 1.0
    sm1_w_out: float = 0.1
    sm2_sigma: float = 2.0
    text_validity: float = 1.0  # seconds an SM1/SM2 detection stays active
    seeds: dict[str, SeedLocation] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown strategy mode {self.mode!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must be in [0, 1]")

    @property
    def needs_textmap(self) -> bool:
        return self.mode in ("inject_first", "inject_repeat", "inject_conservative",
                             "sm1", "sm2")


@dataclass
class StrategyState:
    """Per-run mutable state: dedup memory and the last detection for the
    SM1/SM2 validity window."""

    last_tag: str | None = None
    last_camera: int | None = None
    active_event: TextDetectionEvent | None = None


def sm1_factor(x: float, y: float, region: TagRegion,
               w_in: float = 1.0, w_out: float = 0.1) -> float:
    """High weight inside the (closed) box, low weight outside."""
    return w_in if region.contains(x, y) else w_out


def sm2_factor(x: float, y: float, region: TagRegion, sigma: float) -> float:
    """Gaussian on the Euclidean distance to the closed box (0 inside)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    dx = max(region.x_min - x, 0.0, x - region.x_max)
    dy = max(region.y_min - y, 0.0, y - region.y_max)
    d2 = dx * dx + dy * dy
    return math.exp(-d2 / (2.0 * sigma * sigma))


def sm_log_factors(
    poses: np.ndarray,
    region: TagRegion,
    cfg: StrategyConfig,
) -> np.ndarray:
    """Vectorized log factors for the whole particle set (mode sm1/sm2)."""
    x = poses[:, 0]
    y = poses[:, 1]
    if cfg.mode == "sm1":
        inside = (
            (x >= region.x_min) & (x <= region.x_max)
            & (y >= region.y_min) & (y <= region.y_max)
        )
        return np.where(inside, math.log(cfg.sm1_w_in), math.log(cfg.sm1_w_out))
    if cfg.mode == "sm2":
        dx = np.maximum(np.maximum(region.x_min - x, 0.0), x - region.x_max)
        dy = np.maximum(np.maximum(region.y_min - y, 0.0), y - region.y_max)
        return -(dx * dx + dy * dy) / (2.0 * cfg.sm2_sigma**2)
    raise ValueError(f"mode {cfg.mode!r} has no weight factor")


def active_sm_region(
    state: StrategyState,
    tmap: TextLikelihoodMap,
    cfg: StrategyConfig,
    now: float,
) -> TagRegion | None:
    """Region of the most recent unexpired detection, if any."""
    ev = state.active_event
    if ev is None or now - ev.timestamp > cfg.text_validity:
        return None
    return tmap.lookup(ev.tag)


def _lowest_weight_indices(weights: np.ndarray, count: int) -> np.ndarray:
    # stable sort = ties broken by particle index
    return np.argsort(weights, kind="stable")[:count]


def _replace_lowest(
    pset: ParticleSet,
    new_poses: np.ndarray,
    rng: np.random.Generator,
) -> None:
    """Swap the lowest-weight particles for freshly injected ones.

    Injected particles enter with weight 1/N and the whole set is
    renormalized; they are placed at the head of the arrays so that an
    immediately following injection culls them before older survivors.
    """
    n = pset.n
    count = len(new_poses)
    if count >= n:
        raise ValueError("cannot replace the entire particle set")
    removed = _lowest_weight_indices(pset.weights, count)
    keep = np.ones(n, dtype=bool)
    keep[removed] = False
    poses = np.concatenate([new_poses, pset.poses[keep]])
    weights = np.concatenate([np.full(count, 1.0 / n), pset.weights[keep]])
    pset.poses = poses
    pset.weights = weights / weights.sum()


def _sample_in_region(
    region: TagRegion,
    camera_id: int,
    count: int,
    sigma_inject: float,
    rng: np.random.Generator,
) -> np.ndarray:
    poses = np.empty((count, 3))
    poses[:, 0] = rng.uniform(region.x_min, region.x_max, count)
    poses[:, 1] = rng.uniform(region.y_min, region.y_max, count)
    prior = region.camera_headings[camera_id]
    if math.isnan(prior):
        # camera never saw this tag in training: no orientation information
        poses[:, 2] = rng.uniform(0.0, TWO_PI, count)
    else:
        poses[:, 2] = np.mod(prior + rng.normal(0.0, sigma_inject, count), TWO_PI)
    return poses


def _sample_at_seed(
    seed: SeedLocation,
    count: int,
    rng: np.random.Generator,
) -> np.ndarray:
    poses = np.empty((count, 3))
    poses[:, 0] = rng.normal(seed.x, seed.sigma_xy, count)
    poses[:, 1] = rng.normal(seed.y, seed.sigma_xy, count)
    poses[:, 2] = np.mod(rng.normal(seed.theta, seed.sigma_theta, count), TWO_PI)
    return poses


def handle_detection(
    pset: ParticleSet,
    event: TextDetectionEvent,
    tmap: TextLikelihoodMap | None,
    cfg: StrategyConfig,
    state: StrategyState,
    rng: np.random.Generator,
) -> bool:
    """Process one text detection under the configured strategy.

    Returns True when particles were injected. Always updates the dedup
    memory (and the SM validity window) so that "same tag from the same
    camera" is judged against the full detection stream.
    """
    repeated = event.tag == state.last_tag and event.camera_id == state.last_camera
    state.last_tag = event.tag
    state.last_camera = event.camera_id
    state.active_event = event

    mode = cfg.mode
    if mode in ("none", "sm1", "sm2"):
        return False

    count = int(cfg.rho * pset.n)
    if count == 0:
        return False
    if count >= pset.n:
        raise ValueError("injection ratio would replace every particle")

    if mode == "seed_locations":
        if repeated:
            return False
        seed = cfg.seeds.get(event.tag)
        if seed is None:
            return False
        _replace_lowest(pset, _sample_at_seed(seed, count, rng), rng)
        return True

    region = tmap.lookup(event.tag) if tmap is not None else None
    if region is None:
        return False

    if mode == "inject_first" and repeated:
        return False
    if mode == "inject_conservative":
        if repeated:
            return False
        est = estimate_pose(pset)
        if region.contains(est.x, est.y):
            return False
    # inject_repeat falls through: inject on every detection event

    _replace_lowest(
        pset,
        _sample_in_region(region, event.camera_id, count, cfg.sigma_inject, rng),
        rng,
    )
    return True


def load_seed_file(path) -> dict[str, SeedLocation]:
    """Parse seed locations: per line ``tag x y theta sigma_xy sigma_theta``
    (the trailing five fields are numeric; the rest is the tag)."""
    seeds: dict[str, SeedLocation] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 6:
                raise ValueError(f"{path}:{lineno}: expected tag plus 5 fields")
            tag = " ".join(parts[:-5])
            try:
                x, y, theta, s_xy, s_th = (float(v) for v in parts[-5:])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad number: {exc}") from exc
            seeds[tag] = SeedLocation(x, y, theta, s_xy, s_th)
    return seeds


def save_seed_file(seeds: dict[str, SeedLocation], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tag in sorted(seeds):
            s = seeds[tag]
            fh.write(
                f"{tag} {s.x!r} {s.y!r} {s.theta!r} {s.sigma_xy!r} {s.sigma_theta!r}\n"
            )
