"""Occupancy grids: file I/O, world/cell geometry, distance transform,
raycasting.

Cell states are ternary (free / occupied / unknown). Grids are immutable
after construction and safe to share across threads; the distance field is
derived once per map and reused by every particle evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

FREE = 0
OCCUPIED = 1
UNKNOWN = 2

_CHAR_TO_STATE = {".": FREE, "#": OCCUPIED, "?": UNKNOWN}
_STATE_TO_CHAR = {v: k for k, v in _CHAR_TO_STATE.items()}


class MapLoadError(Exception):
    """Raised for unreadable or inconsistent map files."""


@dataclass(frozen=True)
class OccupancyGrid:
    """Ternary occupancy grid. ``cells[iy, ix]`` with row 0 at minimum y;
    ``origin`` is the world position of the outer corner of cell (0, 0)."""

    width: int
    height: int
    resolution: float
    origin_x: float
    origin_y: float
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("grid must be at least 1x1")
        if self.cells.shape != (self.height, self.width):
            raise ValueError("cells shape does not match width/height")
        self.cells.setflags(write=False)

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        ix = int(np.floor((x - self.origin_x) / self.resolution))
        iy = int(np.floor((y - self.origin_y) / self.resolution))
        return ix, iy

    def cell_to_world(self, ix: int, iy: int) -> tuple[float, float]:
        if not self.in_bounds(ix, iy):
            raise IndexError(f"cell ({ix}, {iy}) outside grid")
        return (
            self.origin_x + (ix + 0.5) * self.resolution,
            self.origin_y + (iy + 0.5) * self.resolution,
        )

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def state_at(self, x: float, y: float) -> int:
        """Cell state at a world point; out-of-bounds reads as UNKNOWN."""
        ix, iy = self.world_to_cell(x, y)
        if not self.in_bounds(ix, iy):
            return UNKNOWN
        return int(self.cells[iy, ix])

    def free_cells(self) -> np.ndarray:
        """(n, 2) array of [ix, iy] for free cells."""
        iy, ix = np.nonzero(self.cells == FREE)
        return np.column_stack([ix, iy])


@dataclass(frozen=True)
class DistanceField:
    """Per-cell distance in meters to the nearest occupied cell center,
    truncated at ``r_max``. Shares the geometry of its source grid."""

    width: int
    height: int
    resolution: float
    origin_x: float
    origin_y: float
    r_max: float
    dist: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.dist.setflags(write=False)

    def distance_at(self, x: float, y: float) -> float:
        """Distance lookup at a world point; outside the grid reads r_max."""
        ix = int(np.floor((x - self.origin_x) / self.resolution))
        iy = int(np.floor((y - self.origin_y) / self.resolution))
        if not (0 <= ix < self.width and 0 <= iy < self.height):
            return self.r_max
        return float(self.dist[iy, ix])


def compute_edt(grid: OccupancyGrid, r_max: float) -> DistanceField:
    """Truncated Euclidean distance transform of the occupied cells.

    Unknown cells are treated as free here: scan endpoints falling into
    unmapped space are scored by their distance to real structure. A grid
    with no occupied cell yields r_max everywhere.
    """
    occ = (grid.cells == OCCUPIED).astype(np.uint8)
    d2 = _kernels.edt_sq_cells(occ)
    dist = np.minimum(np.sqrt(d2) * grid.resolution, r_max)
    return DistanceField(
        width=grid.width,
        height=grid.height,
        resolution=grid.resolution,
        origin_x=grid.origin_x,
        origin_y=grid.origin_y,
        r_max=r_max,
        dist=dist,
    )


def raycast(
    grid: OccupancyGrid,
    x: float,
    y: float,
    bearing: float,
    max_range: float,
    block_unknown: bool = True,
) -> float:
    """Distance from (x, y) along ``bearing`` to the first blocking-cell
    boundary, or ``max_range`` if nothing is hit inside the grid.

    Unknown cells block by default (a simulated sensor cannot see through
    unmapped space). Raises if the origin lies outside the grid.
    """
    return float(
        raycast_batch(grid, x, y, np.array([bearing]), max_range, block_unknown)[0]
    )


def raycast_batch(
    grid: OccupancyGrid,
    x: float,
    y: float,
    bearings: np.ndarray,
    max_range: float,
    block_unknown: bool = True,
) -> np.ndarray:
    if block_unknown:
        blocked = (grid.cells != FREE).astype(np.uint8)
    else:
        blocked = (grid.cells == OCCUPIED).astype(np.uint8)
    return _kernels.raycast_grid(
        blocked,
        grid.origin_x,
        grid.origin_y,
        grid.resolution,
        x,
        y,
        np.asarray(bearings, dtype=np.float64),
        max_range,
    )


def load_map(path) -> OccupancyGrid:
    """Read a ``.gridmap`` file (see ``save_map`` for the format)."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise MapLoadError(f"cannot read map file {path}: {exc}") from exc

    header: dict[str, str] = {}
    row_lines: list[str] = []
    for line in lines:
        if not row_lines and ":" in line:
            key, _, value = line.partition(":")
            header[key.strip()] = value.strip()
        elif line.strip():
            row_lines.append(line)

    for key in ("resolution", "origin", "width", "height"):
        if key not in header:
            raise MapLoadError(f"{path}: missing header line '{key}:'")
    try:
        resolution = float(header["resolution"])
        ox_s, oy_s = header["origin"].split()
        origin_x, origin_y = float(ox_s), float(oy_s)
        width = int(header["width"])
        height = int(header["height"])
    except ValueError as exc:
        raise MapLoadError(f"{path}: malformed header value: {exc}") from exc

    if len(row_lines) != height:
        raise MapLoadError(
            f"{path}: expected {height} data rows, found {len(row_lines)}"
        )
    cells = np.empty((height, width), dtype=np.uint8)
    for iy, line in enumerate(row_lines):
        if len(line) != width:
            raise MapLoadError(
                f"{path}: row {iy} has {len(line)} columns, expected {width}"
            )
        for ix, ch in enumerate(line):
            try:
                cells[iy, ix] = _CHAR_TO_STATE[ch]
            except KeyError:
                raise MapLoadError(
                    f"{path}: row {iy} has invalid cell character {ch!r}"
                ) from None
    return OccupancyGrid(
        width=width,
        height=height,
        resolution=resolution,
        origin_x=origin_x,
        origin_y=origin_y,
        cells=cells,
    )


def save_map(grid: OccupancyGrid, path) -> None:
    """Write the textual map format: a metadata header followed by one
    character row per grid row (row 0 = minimum y), '.'/'#'/'?'."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"resolution: {grid.resolution!r}\n")
        fh.write(f"origin: {grid.origin_x!r} {grid.origin_y!r}\n")
        fh.write(f"width: {grid.width}\n")
        fh.write(f"height: {grid.height}\n")
        for iy in range(grid.height):
            fh.write("".join(_STATE_TO_CHAR[int(v)] for v in grid.cells[iy]))
            fh.write("\n")
