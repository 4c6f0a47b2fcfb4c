"""Text likelihood maps.

Detections of a text tag are histogrammed over coarse 2D cells together
with visit counts; per tag, the cells whose detection rate exceeds a
threshold tau are reduced to an axis-aligned bounding box (outer cell
boundaries) plus, per camera, the circular mean of the robot headings
recorded when that camera made the detection. Lookup of an unknown tag
returns None and the caller ignores the detection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Pose

NUM_CAMERAS = 4
DEFAULT_CELL_SIZE = 0.25


@dataclass(frozen=True)
class DetectionRecord:
    """A tag decoded from one camera frame, stamped with the robot pose."""

    tag: str
    camera_id: int
    pose: Pose
    timestamp: float

    def __post_init__(self):
        if not self.tag:
            raise ValueError("tag must be non-empty")
        if not 0 <= self.camera_id < NUM_CAMERAS:
            raise ValueError(f"camera_id must be in [0, {NUM_CAMERAS})")


@dataclass(frozen=True)
class TagRegion:
    """Bounding box (world meters) and per-camera heading priors (radians,
    NaN where a camera never detected the tag)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    camera_headings: tuple[float, ...]

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError("degenerate bounding box")
        if len(self.camera_headings) != NUM_CAMERAS:
            raise ValueError(f"expected {NUM_CAMERAS} camera headings")

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


class DetectionHistograms:
    """Accumulator for building a TextLikelihoodMap from training data.

    Visits are shared across tags (one per processed pose); detections are
    counted per (tag, cell). Cell indices are floor(p / cell_size), so the
    histogram needs no preset extent.
    """

    def __init__(self, cell_size: float = DEFAULT_CELL_SIZE):
        if cell_size <= 0:
            raise ValueError("cell_size must be positive")
        self.cell_size = cell_size
        self.visits: dict[tuple[int, int], int] = {}
        self.detections: dict[str, dict[tuple[int, int], int]] = {}
        # per (tag, camera): running sin/cos sums of robot headings
        self._heading_sums: dict[tuple[str, int], list[float]] = {}

    def _cell(self, x: float, y: float) -> tuple[int, int]:
        return (
            int(math.floor(x / self.cell_size)),
            int(math.floor(y / self.cell_size)),
        )

    def accumulate_visit(self, pose: Pose) -> None:
        cell = self._cell(pose.x, pose.y)
        self.visits[cell] = self.visits.get(cell, 0) + 1

    def accumulate(self, record: DetectionRecord) -> None:
        """Count a detection (a detection implies a visit)."""
        cell = self._cell(record.pose.x, record.pose.y)
        self.visits[cell] = self.visits.get(cell, 0) + 1
        per_tag = self.detections.setdefault(record.tag, {})
        per_tag[cell] = per_tag.get(cell, 0) + 1
        sums = self._heading_sums.setdefault((record.tag, record.camera_id), [0.0, 0.0])
        sums[0] += math.sin(record.pose.theta)
        sums[1] += math.cos(record.pose.theta)

    def total_detections(self, tag: str) -> int:
        return sum(self.detections.get(tag, {}).values())

    def build(self, tau: float = 0.0) -> "TextLikelihoodMap":
        """Reduce histograms to bounding boxes over cells whose detection
        rate exceeds tau; tags with no qualifying cell are omitted."""
        regions: dict[str, TagRegion] = {}
        cs = self.cell_size
        for tag, cells in self.detections.items():
            qualifying = [
                c
                for c, n_det in cells.items()
                if self.visits.get(c, 0) > 0 and n_det / self.visits[c] > tau
            ]
            if not qualifying:
                continue
            xs = [c[0] for c in qualifying]
            ys = [c[1] for c in qualifying]
            headings = []
            for cam in range(NUM_CAMERAS):
                sums = self._heading_sums.get((tag, cam))
                if sums is None:
                    headings.append(math.nan)
                else:
                    headings.append(math.atan2(sums[0], sums[1]) % (2.0 * math.pi))
            regions[tag] = TagRegion(
                x_min=min(xs) * cs,
                y_min=min(ys) * cs,
                x_max=(max(xs) + 1) * cs,
                y_max=(max(ys) + 1) * cs,
                camera_headings=tuple(headings),
            )
        return TextLikelihoodMap(regions)


@dataclass(frozen=True)
class TextLikelihoodMap:
    """Immutable per-tag detection regions with camera heading priors."""

    regions: dict[str, TagRegion] = field(default_factory=dict)

    def lookup(self, tag: str) -> TagRegion | None:
        return self.regions.get(tag)

    def tags(self) -> list[str]:
        return sorted(self.regions)

    def save(self, path) -> None:
        """One record per line: tag, bbox extents, then one heading per
        camera with 'nan' for absent priors."""
        with open(path, "w", encoding="utf-8") as fh:
            for tag in self.tags():
                r = self.regions[tag]
                fields = [tag]
                fields += [repr(float(v)) for v in (r.x_min, r.y_min, r.x_max, r.y_max)]
                fields += [repr(float(h)) for h in r.camera_headings]
                fh.write(" ".join(fields) + "\n")


def load_textmap(path) -> TextLikelihoodMap:
    """Parse the textual format written by ``TextLikelihoodMap.save``.

    The trailing 4 + NUM_CAMERAS fields are numeric; everything before
    them is the tag, so tags containing spaces survive a round trip.
    """
    n_tail = 4 + NUM_CAMERAS
    regions: dict[str, TagRegion] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) < n_tail + 1:
                raise ValueError(f"{path}:{lineno}: expected tag plus {n_tail} fields")
            tag = " ".join(parts[: len(parts) - n_tail])
            try:
                nums = [float(v) for v in parts[len(parts) - n_tail:]]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad number: {exc}") from exc
            regions[tag] = TagRegion(
                x_min=nums[0],
                y_min=nums[1],
                x_max=nums[2],
                y_max=nums[3],
                camera_headings=tuple(nums[4:]),
            )
    return TextLikelihoodMap(regions)
