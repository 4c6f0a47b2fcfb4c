"""Asynchronous Monte Carlo localization core.

The particle set is advanced on every odometry input; scan corrections are
gated on accumulated motion (either threshold triggers). Weights are
updated in log space with max-subtraction, resampling is low-variance
(systematic) and fires exactly when the effective sample size drops below
N/2. A single logical owner mutates the set; the per-particle weighting
itself is pure and batched through the sensor kernels.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import OdomDelta, Pose, TWO_PI
from .gridmap import DistanceField, OccupancyGrid
from .motion import sample_motion_batch
from .sensor import Scan, prepare_endpoints, scan_log_weight_batch

log = logging.getLogger(__name__)

WEIGHT_TOLERANCE = 1e-9


@dataclass
class ParticleSet:
    """N weighted pose hypotheses plus motion accumulated since the last
    correction. Weights are kept normalized (sum 1) between operations."""

    poses: np.ndarray  # (n, 3): x, y, theta
    weights: np.ndarray  # (n,), normalized
    accum_trans: float = 0.0
    accum_rot: float = 0.0
    degeneracy_events: int = 0

    @property
    def n(self) -> int:
        return len(self.weights)

    def copy(self) -> "ParticleSet":
        return ParticleSet(
            poses=self.poses.copy(),
            weights=self.weights.copy(),
            accum_trans=self.accum_trans,
            accum_rot=self.accum_rot,
            degeneracy_events=self.degeneracy_events,
        )


@dataclass(frozen=True)
class CorrectionStats:
    """What one correction step did (useful for gating tests and reports)."""

    ess: float
    resampled: bool
    degenerate: bool


def init_uniform(n: int, grid: OccupancyGrid, rng: np.random.Generator) -> ParticleSet:
    """Particles uniform over the free cells of the map, headings uniform
    in [0, 2*pi), weights 1/n."""
    if n < 1:
        raise ValueError("need at least one particle")
    free = grid.free_cells()
    if len(free) == 0:
        raise ValueError("map has no free cells to initialize in")
    picks = rng.integers(0, len(free), n)
    offsets = rng.uniform(0.0, 1.0, (n, 2))
    poses = np.empty((n, 3))
    poses[:, 0] = grid.origin_x + (free[picks, 0] + offsets[:, 0]) * grid.resolution
    poses[:, 1] = grid.origin_y + (free[picks, 1] + offsets[:, 1]) * grid.resolution
    poses[:, 2] = rng.uniform(0.0, TWO_PI, n)
    return ParticleSet(poses=poses, weights=np.full(n, 1.0 / n))


def predict(
    pset: ParticleSet,
    delta: OdomDelta,
    sigma_odom: tuple[float, float, float],
    rng: np.random.Generator,
) -> None:
    """Advance every particle through the motion model; weights untouched."""
    pset.poses = sample_motion_batch(pset.poses, delta, sigma_odom, rng)
    pset.accum_trans += math.hypot(delta.dx, delta.dy)
    pset.accum_rot += abs(delta.dtheta)


def should_correct(pset: ParticleSet, d_xy: float, d_theta: float) -> bool:
    """Gate: correct once the robot moved d_xy meters or turned d_theta."""
    return pset.accum_trans >= d_xy or pset.accum_rot >= d_theta


def effective_sample_size(pset: ParticleSet) -> float:
    return float(1.0 / np.sum(pset.weights**2))


def resample_low_variance(pset: ParticleSet, rng: np.random.Generator) -> None:
    """Systematic resampling with a single random offset; weights reset."""
    n = pset.n
    positions = (rng.uniform() + np.arange(n)) / n
    cumulative = np.cumsum(pset.weights)
    cumulative[-1] = 1.0  # guard the last bin against rounding
    idx = np.searchsorted(cumulative, positions, side="right")
    pset.poses = pset.poses[idx]
    pset.weights = np.full(n, 1.0 / n)


def correct(
    pset: ParticleSet,
    scan: Scan,
    dfield: DistanceField,
    sigma_obs: float,
    rng: np.random.Generator,
    stride: int = 1,
    aux_log_weights: np.ndarray | None = None,
) -> CorrectionStats:
    """Weight particles by the scan likelihood (times any auxiliary
    factors), renormalize, reset the motion gate, and resample when the
    effective sample size falls below n/2.

    On total weight underflow the set is reset to uniform and the event is
    counted rather than aborting the run.
    """
    ex, ey = prepare_endpoints(scan, stride)
    log_lik = scan_log_weight_batch(dfield, pset.poses, ex, ey, sigma_obs)
    if aux_log_weights is not None:
        log_lik = log_lik + aux_log_weights

    with np.errstate(divide="ignore"):
        log_w = np.log(pset.weights) + log_lik

    degenerate = False
    m = np.max(log_w)
    if not np.isfinite(m):
        degenerate = True
    else:
        w = np.exp(log_w - m)
        total = w.sum()
        if total <= 0.0 or not np.isfinite(total):
            degenerate = True
        else:
            pset.weights = w / total

    if degenerate:
        pset.degeneracy_events += 1
        pset.weights = np.full(pset.n, 1.0 / pset.n)
        log.warning("weight degeneracy: resetting %d particles to uniform", pset.n)

    pset.accum_trans = 0.0
    pset.accum_rot = 0.0

    ess = effective_sample_size(pset)
    resampled = ess < pset.n / 2.0
    if resampled:
        resample_low_variance(pset, rng)
    return CorrectionStats(ess=ess, resampled=resampled, degenerate=degenerate)


def estimate_pose(pset: ParticleSet) -> Pose:
    """Weighted mean position with a weighted circular mean heading."""
    w = pset.weights
    x = float(np.dot(w, pset.poses[:, 0]))
    y = float(np.dot(w, pset.poses[:, 1]))
    theta = math.atan2(
        float(np.dot(w, np.sin(pset.poses[:, 2]))),
        float(np.dot(w, np.cos(pset.poses[:, 2]))),
    )
    return Pose(x, y, theta)
