import math

import numpy as np
import pytest

from conftest import make_grid, random_grid
from textmcl.gridmap import (
    FREE,
    OCCUPIED,
    UNKNOWN,
    MapLoadError,
    OccupancyGrid,
    compute_edt,
    load_map,
    raycast,
    save_map,
)


def brute_force_edt(grid, r_max):
    """All-pairs nearest-occupied search; the independent oracle."""
    occ = np.argwhere(grid.cells == OCCUPIED).astype(np.float64)  # (k, [iy, ix])
    h, w = grid.cells.shape
    out = np.full((h, w), r_max)
    if len(occ) == 0:
        return out
    ys, xs = np.mgrid[0:h, 0:w]
    pts = np.column_stack([ys.ravel(), xs.ravel()]).astype(np.float64)
    d2 = ((pts[:, None, :] - occ[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    return np.minimum(np.sqrt(d2).reshape(h, w) * grid.resolution, r_max)


class TestMapIO:
    def test_load_center_occupied(self, tmp_path):
        path = tmp_path / "m.gridmap"
        path.write_text(
            "resolution: 0.5\norigin: 0 0\nwidth: 3\nheight: 3\n...\n.#.\n...\n"
        )
        grid = load_map(path)
        assert np.count_nonzero(grid.cells == OCCUPIED) == 1
        assert np.count_nonzero(grid.cells == FREE) == 8
        assert grid.cells[1, 1] == OCCUPIED

    def test_inconsistent_width_errors(self, tmp_path):
        path = tmp_path / "bad.gridmap"
        path.write_text(
            "resolution: 0.5\norigin: 0 0\nwidth: 4\nheight: 2\n...\n....\n"
        )
        with pytest.raises(MapLoadError, match="columns"):
            load_map(path)

    def test_missing_header_errors(self, tmp_path):
        path = tmp_path / "bad.gridmap"
        path.write_text("resolution: 0.5\nwidth: 1\nheight: 1\n.\n")
        with pytest.raises(MapLoadError, match="origin"):
            load_map(path)

    def test_unreadable_file_errors(self, tmp_path):
        with pytest.raises(MapLoadError, match="cannot read"):
            load_map(tmp_path / "absent.gridmap")

    def test_invalid_character_errors(self, tmp_path):
        path = tmp_path / "bad.gridmap"
        path.write_text("resolution: 0.5\norigin: 0 0\nwidth: 1\nheight: 1\nX\n")
        with pytest.raises(MapLoadError, match="invalid cell"):
            load_map(path)

    def test_round_trip_random_grids(self, tmp_path, rng):
        for i in range(10):
            grid = random_grid(
                rng, 32, 32, p_occ=0.1, p_unknown=0.05,
                resolution=float(rng.uniform(0.01, 0.5)),
            )
            grid = OccupancyGrid(
                width=grid.width,
                height=grid.height,
                resolution=grid.resolution,
                origin_x=float(rng.normal(0, 10)),
                origin_y=float(rng.normal(0, 10)),
                cells=np.array(grid.cells),
            )
            path = tmp_path / f"rt{i}.gridmap"
            save_map(grid, path)
            back = load_map(path)
            assert back.resolution == grid.resolution
            assert back.origin_x == grid.origin_x
            assert back.origin_y == grid.origin_y
            assert np.array_equal(back.cells, grid.cells)

    def test_unknown_preserved(self, tmp_path):
        path = tmp_path / "u.gridmap"
        path.write_text("resolution: 1.0\norigin: 0 0\nwidth: 2\nheight: 1\n?.\n")
        grid = load_map(path)
        assert grid.cells[0, 0] == UNKNOWN


class TestEdt:
    def test_three_four_five(self):
        rows = ["." * 5 for _ in range(5)]
        grid = make_grid(rows)
        cells = np.array(grid.cells)
        cells[0, 0] = OCCUPIED
        grid = OccupancyGrid(5, 5, 1.0, 0.0, 0.0, cells)
        dfield = compute_edt(grid, r_max=10.0)
        assert dfield.dist[4, 3] == pytest.approx(5.0, abs=1e-12)

    def test_occupied_cell_is_zero(self):
        grid = make_grid(["...", ".#.", "..."])
        dfield = compute_edt(grid, r_max=10.0)
        assert dfield.dist[1, 1] == 0.0

    def test_matches_brute_force(self, rng):
        for _ in range(25):
            w = int(rng.integers(2, 65))
            h = int(rng.integers(2, 65))
            grid = random_grid(rng, w, h, p_occ=0.06, resolution=0.05)
            r_max = 1.2
            dfield = compute_edt(grid, r_max)
            oracle = brute_force_edt(grid, r_max)
            assert np.max(np.abs(dfield.dist - oracle)) < 1e-9

    def test_truncation_exact(self, rng):
        grid = random_grid(rng, 40, 40, p_occ=0.02, resolution=0.05)
        r_max = 0.4
        dfield = compute_edt(grid, r_max)
        untruncated = brute_force_edt(grid, r_max=1e9)
        assert np.all(dfield.dist <= r_max + 1e-15)
        capped = untruncated >= r_max
        assert np.array_equal(dfield.dist == r_max, capped)

    def test_no_occupied_cells_all_rmax(self):
        grid = make_grid(["...", "...", "..."], resolution=0.5)
        dfield = compute_edt(grid, r_max=3.0)
        assert np.all(dfield.dist == 3.0)

    def test_unknown_treated_as_free(self):
        grid = make_grid(["?.#"], resolution=1.0)
        dfield = compute_edt(grid, r_max=10.0)
        assert dfield.dist[0, 0] == pytest.approx(2.0)

    def test_lipschitz_between_neighbors(self, rng):
        grid = random_grid(rng, 48, 48, p_occ=0.05, resolution=0.05)
        d = compute_edt(grid, r_max=1.5).dist
        bound = grid.resolution * math.sqrt(2) + 1e-12
        assert np.max(np.abs(np.diff(d, axis=0))) <= bound
        assert np.max(np.abs(np.diff(d, axis=1))) <= bound

    def test_lookup_outside_reads_rmax(self):
        grid = make_grid([".#"], resolution=1.0)
        dfield = compute_edt(grid, r_max=5.0)
        assert dfield.distance_at(-100.0, 0.0) == 5.0


class TestRaycast:
    def test_perpendicular_wall(self):
        rows = ["#" * 9] + ["." * 9 for _ in range(8)]
        grid = make_grid(rows, resolution=0.5)  # wall along the top row
        # origin 2.0 m below the wall face
        dist = raycast(grid, 2.25, 2.0, math.pi / 2, max_range=10.0)
        assert dist == pytest.approx(2.0, abs=grid.resolution)

    def test_empty_map_max_range(self):
        grid = make_grid(["." * 8 for _ in range(8)], resolution=0.5)
        assert raycast(grid, 2.0, 2.0, 0.3, max_range=3.0) == 3.0

    def test_origin_outside_errors(self):
        grid = make_grid(["..", ".."])
        with pytest.raises(ValueError, match="outside"):
            raycast(grid, -5.0, 0.5, 0.0, max_range=2.0)

    def test_unknown_blocks_by_default(self):
        grid = make_grid([".?."], resolution=1.0)
        assert raycast(grid, 0.5, 0.5, 0.0, max_range=5.0) == pytest.approx(0.5)
        assert raycast(
            grid, 0.5, 0.5, 0.0, max_range=5.0, block_unknown=False
        ) == 5.0

    def test_against_marching_oracle(self, rng):
        grid = random_grid(rng, 64, 64, p_occ=0.04, resolution=0.05)
        max_range = 2.5
        free = grid.free_cells()
        diag = grid.resolution * math.sqrt(2)
        checked = 0
        while checked < 100:
            ix, iy = free[rng.integers(0, len(free))]
            x = grid.origin_x + (ix + rng.uniform(0.05, 0.95)) * grid.resolution
            y = grid.origin_y + (iy + rng.uniform(0.05, 0.95)) * grid.resolution
            bearing = rng.uniform(-math.pi, math.pi)
            got = raycast(grid, x, y, bearing, max_range)
            # fine-stepped marching oracle
            step = grid.resolution / 10.0
            oracle = max_range
            for i in range(1, int(max_range / step) + 1):
                px = x + math.cos(bearing) * i * step
                py = y + math.sin(bearing) * i * step
                if grid.state_at(px, py) != FREE:
                    oracle = i * step
                    break
            assert abs(got - oracle) <= diag, (x, y, bearing)
            checked += 1

    def test_monotone_in_max_range(self, rng):
        grid = random_grid(rng, 40, 40, p_occ=0.05, resolution=0.05)
        free = grid.free_cells()
        for _ in range(50):
            ix, iy = free[rng.integers(0, len(free))]
            x = grid.origin_x + (ix + 0.5) * grid.resolution
            y = grid.origin_y + (iy + 0.5) * grid.resolution
            bearing = rng.uniform(-math.pi, math.pi)
            prev = None
            for max_range in (0.3, 0.8, 1.5, 3.0):
                got = raycast(grid, x, y, bearing, max_range)
                if prev is not None and prev < min(0.3, max_range):
                    assert got == pytest.approx(prev)
                prev = got

    def test_start_inside_wall_returns_zero(self):
        grid = make_grid(["#."])
        assert raycast(grid, 0.5, 0.5, 0.0, max_range=2.0) == 0.0


class TestCellGeometry:
    def test_world_to_cell_example(self):
        grid = make_grid(["." * 8 for _ in range(8)], resolution=0.05)
        assert grid.world_to_cell(0.10, 0.20) == (2, 4)

    def test_round_trip_within_half_cell(self, rng):
        grid = make_grid(
            ["." * 16 for _ in range(12)], resolution=0.2, origin=(-1.0, 2.0)
        )
        for _ in range(200):
            x = rng.uniform(-1.0, -1.0 + 16 * 0.2)
            y = rng.uniform(2.0, 2.0 + 12 * 0.2)
            ix, iy = grid.world_to_cell(x, y)
            cx, cy = grid.cell_to_world(ix, iy)
            assert abs(cx - x) <= 0.1 + 1e-12
            assert abs(cy - y) <= 0.1 + 1e-12

    def test_negative_coordinates_with_shifted_origin(self):
        grid = make_grid(["..", ".."], resolution=0.5, origin=(-2.0, -2.0))
        assert grid.world_to_cell(-1.75, -1.25) == (0, 1)
        assert grid.cell_to_world(0, 1) == (-1.75, -1.25)

    def test_out_of_bounds_lookup_errors(self):
        grid = make_grid(["..", ".."])
        with pytest.raises(IndexError):
            grid.cell_to_world(5, 0)

    def test_grid_invariants_enforced(self):
        with pytest.raises(ValueError):
            OccupancyGrid(2, 2, -1.0, 0, 0, np.zeros((2, 2), dtype=np.uint8))
        with pytest.raises(ValueError):
            OccupancyGrid(0, 2, 1.0, 0, 0, np.zeros((2, 0), dtype=np.uint8))
