"""Time-ordered simulation logs: ground truth, odometry, scans, text events.

File format, one record per line:

    <t> GT <x> <y> <theta>
    <t> ODOM <dx> <dy> <dtheta>
    <t> SCAN <K> <r_1> ... <r_K>
    <t> TEXT <tag> <camera_id>

Scan bearings are implied by K: uniformly spaced over 360 degrees in the
sensor frame, bearing_k = -pi + 2*pi*k/K. No-return beams are written as
``inf`` and flagged invalid when read back. Records at equal timestamps
keep file order (writers emit GT before the sensor records it stamps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import OdomDelta, Pose
from .sensor import Scan
from .strategies import TextDetectionEvent


@dataclass(frozen=True)
class GroundTruthRecord:
    timestamp: float
    pose: Pose


@dataclass(frozen=True)
class OdomRecord:
    timestamp: float
    delta: OdomDelta


@dataclass(frozen=True)
class ScanRecord:
    timestamp: float
    scan: Scan


@dataclass(frozen=True)
class TextRecord:
    timestamp: float
    event: TextDetectionEvent


Record = GroundTruthRecord | OdomRecord | ScanRecord | TextRecord


@dataclass
class SequenceLog:
    records: list[Record] = field(default_factory=list)

    def append(self, record: Record) -> None:
        if self.records and record.timestamp < self.records[-1].timestamp:
            raise ValueError("records must have non-decreasing timestamps")
        self.records.append(record)

    @property
    def duration(self) -> float:
        if not self.records:
            return 0.0
        return self.records[-1].timestamp - self.records[0].timestamp

    def ground_truth(self) -> list[GroundTruthRecord]:
        return [r for r in self.records if isinstance(r, GroundTruthRecord)]


def scan_bearings(k: int) -> np.ndarray:
    """The implied bearing layout for a K-beam panoramic scan."""
    return -math.pi + 2.0 * math.pi * np.arange(k) / k


def make_scan(timestamp: float, ranges: np.ndarray) -> Scan:
    """Build a Scan from raw ranges; non-finite ranges become invalid beams."""
    ranges = np.asarray(ranges, dtype=np.float64)
    return Scan(
        timestamp=timestamp,
        bearings=scan_bearings(len(ranges)),
        ranges=ranges,
        valid=np.isfinite(ranges),
    )


class SeqLogError(Exception):
    """Malformed sequence-log input; message names the offending line."""


def save_seqlog(log: SequenceLog, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in log.records:
            t = repr(float(rec.timestamp))
            if isinstance(rec, GroundTruthRecord):
                p = rec.pose
                fh.write(f"{t} GT {p.x!r} {p.y!r} {p.theta!r}\n")
            elif isinstance(rec, OdomRecord):
                d = rec.delta
                fh.write(f"{t} ODOM {d.dx!r} {d.dy!r} {d.dtheta!r}\n")
            elif isinstance(rec, ScanRecord):
                ranges = rec.scan.ranges
                vals = " ".join(
                    "inf" if not math.isfinite(r) else repr(float(r)) for r in ranges
                )
                fh.write(f"{t} SCAN {len(ranges)} {vals}\n")
            elif isinstance(rec, TextRecord):
                ev = rec.event
                fh.write(f"{t} TEXT {ev.tag} {ev.camera_id}\n")
            else:  # pragma: no cover - exhaustive over Record
                raise TypeError(f"unknown record type {type(rec)!r}")


def load_seqlog(path) -> SequenceLog:
    log = SequenceLog()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            try:
                t = float(parts[0])
                kind = parts[1]
                if kind == "GT":
                    x, y, theta = (float(v) for v in parts[2:5])
                    if len(parts) != 5:
                        raise ValueError("GT record takes 3 fields")
                    log.append(GroundTruthRecord(t, Pose(x, y, theta)))
                elif kind == "ODOM":
                    dx, dy, dth = (float(v) for v in parts[2:5])
                    if len(parts) != 5:
                        raise ValueError("ODOM record takes 3 fields")
                    log.append(OdomRecord(t, OdomDelta(dx, dy, dth)))
                elif kind == "SCAN":
                    k = int(parts[2])
                    ranges = np.array([float(v) for v in parts[3:]])
                    if len(ranges) != k:
                        raise ValueError(f"SCAN declares {k} beams, has {len(ranges)}")
                    log.append(ScanRecord(t, make_scan(t, ranges)))
                elif kind == "TEXT":
                    camera_id = int(parts[-1])
                    tag = " ".join(parts[2:-1])
                    log.append(TextRecord(t, TextDetectionEvent(tag, camera_id, t)))
                else:
                    raise ValueError(f"unknown record kind {kind!r}")
            except (ValueError, IndexError) as exc:
                raise SeqLogError(f"{path}:{lineno}: {exc}") from exc
    return log
