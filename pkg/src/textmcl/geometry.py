"""Planar pose types and angle arithmetic shared across the package."""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Normalize an angle into [0, 2*pi)."""
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    return theta


def angle_diff(a: float, b: float) -> float:
    """Shortest signed arc from b to a, in (-pi, pi]."""
    d = math.fmod(a - b, TWO_PI)
    if d <= -math.pi:
        d += TWO_PI
    elif d > math.pi:
        d -= TWO_PI
    return d


@dataclass(frozen=True)
class Pose:
    """Planar robot state; theta is kept normalized in [0, 2*pi)."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def compose(self, delta: "OdomDelta") -> "Pose":
        """Apply a robot-frame displacement to this world-frame pose."""
        c = math.cos(self.theta)
        s = math.sin(self.theta)
        return Pose(
            self.x + c * delta.dx - s * delta.dy,
            self.y + s * delta.dx + c * delta.dy,
            self.theta + delta.dtheta,
        )


@dataclass(frozen=True)
class OdomDelta:
    """Robot-frame displacement between consecutive odometry readings."""

    dx: float
    dy: float
    dtheta: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.dx, self.dy, self.dtheta)):
            raise ValueError("odometry delta must be finite")
