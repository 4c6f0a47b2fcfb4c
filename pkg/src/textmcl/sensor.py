"""Beam-end observation model.

Each scan endpoint is scored by its distance to the nearest mapped
obstacle, exp(-d^2 / (2 sigma_obs^2)); beams are aggregated as the
geometric mean of their likelihoods (product of experts) to counter the
overconfidence of treating densely-spaced beams as independent. The
Gaussian normalization constant is dropped: it cancels after weight
normalization and keeps results in (0, 1].

Evaluation runs in log space and is read-only over the distance field,
so particle weighting can be batched through the compiled kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import Pose
from .gridmap import DistanceField

LOG_LIKELIHOOD_FLOOR = math.log(1e-300)


@dataclass(frozen=True)
class Scan:
    """One LiDAR scan: per-beam bearing (sensor frame, strictly increasing),
    range in meters, and a validity flag for no-return beams."""

    timestamp: float
    bearings: np.ndarray
    ranges: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bearings, dtype=np.float64)
        if b.ndim != 1 or len(b) == 0:
            raise ValueError("scan needs at least one beam")
        if np.any(np.diff(b) <= 0):
            raise ValueError("beam bearings must be strictly increasing")
        if not (len(b) == len(self.ranges) == len(self.valid)):
            raise ValueError("bearings/ranges/valid lengths differ")

    @property
    def num_valid(self) -> int:
        return int(np.count_nonzero(self.valid))


def prepare_endpoints(scan: Scan, stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Sensor-frame endpoint coordinates of the beams used for weighting.

    ``stride`` uniformly decimates beams (runtime knob; default keeps all),
    then invalid beams are dropped. Raises if nothing remains.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    sel = np.zeros(len(scan.bearings), dtype=bool)
    sel[::stride] = True
    sel &= np.asarray(scan.valid, dtype=bool)
    if not sel.any():
        raise ValueError("scan has no valid beams after decimation")
    b = np.asarray(scan.bearings, dtype=np.float64)[sel]
    r = np.asarray(scan.ranges, dtype=np.float64)[sel]
    return r * np.cos(b), r * np.sin(b)


def beam_likelihood(dfield: DistanceField, x: float, y: float, sigma_obs: float) -> float:
    """Likelihood of a single beam endpoint at world point (x, y)."""
    if sigma_obs <= 0:
        raise ValueError("sigma_obs must be positive")
    d = dfield.distance_at(x, y)
    return math.exp(max(-(d * d) / (2.0 * sigma_obs * sigma_obs), LOG_LIKELIHOOD_FLOOR))


def scan_log_weight_batch(
    dfield: DistanceField,
    poses: np.ndarray,
    ex: np.ndarray,
    ey: np.ndarray,
    sigma_obs: float,
) -> np.ndarray:
    """Log geometric-mean likelihood for each pose in an (n, 3) array."""
    if sigma_obs <= 0:
        raise ValueError("sigma_obs must be positive")
    return _kernels.scan_log_weights(
        dfield.dist,
        dfield.origin_x,
        dfield.origin_y,
        dfield.resolution,
        dfield.r_max,
        np.asarray(poses, dtype=np.float64),
        ex,
        ey,
        1.0 / (2.0 * sigma_obs * sigma_obs),
        LOG_LIKELIHOOD_FLOOR,
    )


def scan_likelihood(
    dfield: DistanceField,
    pose: Pose,
    scan: Scan,
    sigma_obs: float,
    stride: int = 1,
) -> float:
    """Geometric-mean likelihood of a scan from one pose, in (0, 1]."""
    ex, ey = prepare_endpoints(scan, stride)
    poses = np.array([[pose.x, pose.y, pose.theta]])
    return float(np.exp(scan_log_weight_batch(dfield, poses, ex, ey, sigma_obs)[0]))
