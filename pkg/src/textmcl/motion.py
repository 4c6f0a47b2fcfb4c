"""Holonomic odometry motion model.

Noise is additive Gaussian on the robot-frame displacement components,
applied before composing into the world frame. Pure functions of an
explicit RNG so callers control reproducibility.
"""

from __future__ import annotations

import numpy as np

from .geometry import OdomDelta, Pose, TWO_PI


def sample_motion(
    pose: Pose,
    delta: OdomDelta,
    sigma_odom: tuple[float, float, float],
    rng: np.random.Generator,
) -> Pose:
    """Sample one successor pose from the odometry proposal."""
    if any(s < 0 for s in sigma_odom):
        raise ValueError("sigma_odom components must be non-negative")
    eps = rng.normal(0.0, 1.0, 3) * np.asarray(sigma_odom)
    noisy = OdomDelta(delta.dx + eps[0], delta.dy + eps[1], delta.dtheta + eps[2])
    return pose.compose(noisy)


def sample_motion_batch(
    poses: np.ndarray,
    delta: OdomDelta,
    sigma_odom: tuple[float, float, float],
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized counterpart over an (n, 3) pose array; returns a new array."""
    if any(s < 0 for s in sigma_odom):
        raise ValueError("sigma_odom components must be non-negative")
    n = poses.shape[0]
    eps = rng.normal(0.0, 1.0, (n, 3)) * np.asarray(sigma_odom)[None, :]
    dx = delta.dx + eps[:, 0]
    dy = delta.dy + eps[:, 1]
    dth = delta.dtheta + eps[:, 2]
    c = np.cos(poses[:, 2])
    s = np.sin(poses[:, 2])
    out = np.empty_like(poses)
    out[:, 0] = poses[:, 0] + c * dx - s * dy
    out[:, 1] = poses[:, 1] + s * dx + c * dy
    out[:, 2] = np.mod(poses[:, 2] + dth, TWO_PI)
    return out
