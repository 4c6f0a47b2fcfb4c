import numpy as np
import pytest

from textmcl.gridmap import FREE, OCCUPIED, UNKNOWN, OccupancyGrid


def make_grid(rows, resolution=1.0, origin=(0.0, 0.0)):
    """Grid from ascii art rows given top-down (row 0 printed last)."""
    chars = {".": FREE, "#": OCCUPIED, "?": UNKNOWN}
    cells = np.array(
        [[chars[c] for c in row] for row in reversed(rows)], dtype=np.uint8
    )
    return OccupancyGrid(
        width=cells.shape[1],
        height=cells.shape[0],
        resolution=resolution,
        origin_x=origin[0],
        origin_y=origin[1],
        cells=cells,
    )


def random_grid(rng, width, height, p_occ=0.08, p_unknown=0.0, resolution=0.05):
    r = rng.random((height, width))
    cells = np.full((height, width), FREE, dtype=np.uint8)
    cells[r < p_occ] = OCCUPIED
    cells[(r >= p_occ) & (r < p_occ + p_unknown)] = UNKNOWN
    return OccupancyGrid(
        width=width,
        height=height,
        resolution=resolution,
        origin_x=0.0,
        origin_y=0.0,
        cells=cells,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
