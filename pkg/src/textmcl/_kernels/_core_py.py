"""Pure NumPy implementations of the hot-loop kernels.

Slower than the compiled twin in ``_core.pyx`` but dependency-free; the
two backends are interchangeable and are cross-checked in the test suite.
All functions are pure and operate on plain float64/uint8 arrays.
"""

from __future__ import annotations

import numpy as np

BIG = 1e20  # stands in for "no occupied cell anywhere" in squared-cell units


def edt_sq_cells(occ: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distance (in cell units) to the nearest
    nonzero cell of ``occ``.

    Two-stage decomposition: per-row 1D distance to the nearest occupied
    cell in that row, then a per-column combine
    ``d2[i,j] = min_k (i-k)^2 + rowdist[k,j]^2``. Cells in rows without
    any occupied cell enter the combine with ``BIG``.
    """
    occ = np.asarray(occ, dtype=bool)
    h, w = occ.shape

    # stage 1: within-row distance (in cells) to nearest occupied cell
    row = np.full((h, w), BIG)
    run = np.full(h, BIG)
    for j in range(w):
        run = np.where(occ[:, j], 0.0, run + 1.0)
        row[:, j] = run
    run = np.full(h, BIG)
    for j in range(w - 1, -1, -1):
        run = np.where(occ[:, j], 0.0, run + 1.0)
        row[:, j] = np.minimum(row[:, j], run)
    g2 = np.minimum(row, BIG) ** 2
    g2[row >= BIG] = BIG

    # stage 2: combine across rows, chunked over columns to bound memory
    idx = np.arange(h, dtype=np.float64)
    diff2 = (idx[:, None] - idx[None, :]) ** 2  # (i, k)
    out = np.empty((h, w))
    chunk = max(1, int(4_000_000 / (h * h)))
    for j0 in range(0, w, chunk):
        j1 = min(w, j0 + chunk)
        # (i, k, j) -> min over k
        cand = diff2[:, :, None] + g2[None, :, j0:j1]
        out[:, j0:j1] = cand.min(axis=1)
    return np.minimum(out, BIG)


def scan_log_weights(
    dist: np.ndarray,
    origin_x: float,
    origin_y: float,
    resolution: float,
    r_max: float,
    poses: np.ndarray,
    ex: np.ndarray,
    ey: np.ndarray,
    inv_two_sigma_sq: float,
    log_floor: float,
) -> np.ndarray:
    """Log geometric-mean endpoint likelihood for a batch of poses.

    ``dist`` is the truncated distance field in meters, ``(ex, ey)`` the
    sensor-frame beam endpoints. For each pose the endpoints are rotated
    and translated into the world, looked up in ``dist`` (out-of-bounds
    reads score ``r_max``), scored as ``-d^2 * inv_two_sigma_sq`` clamped
    at ``log_floor``, and averaged over beams.
    """
    h, w = dist.shape
    poses = np.asarray(poses, dtype=np.float64)
    c = np.cos(poses[:, 2])[:, None]
    s = np.sin(poses[:, 2])[:, None]
    wx = poses[:, 0][:, None] + c * ex[None, :] - s * ey[None, :]
    wy = poses[:, 1][:, None] + s * ex[None, :] + c * ey[None, :]
    ix = np.floor((wx - origin_x) / resolution).astype(np.int64)
    iy = np.floor((wy - origin_y) / resolution).astype(np.int64)
    inside = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
    d = np.full(ix.shape, r_max)
    d[inside] = dist[iy[inside], ix[inside]]
    terms = np.maximum(-(d * d) * inv_two_sigma_sq, log_floor)
    return terms.mean(axis=1)


def raycast_grid(
    blocked: np.ndarray,
    origin_x: float,
    origin_y: float,
    resolution: float,
    x0: float,
    y0: float,
    bearings: np.ndarray,
    max_range: float,
) -> np.ndarray:
    """Cast rays through a cell grid, returning the distance to the first
    blocked-cell boundary (or ``max_range``).

    Integer grid traversal with all rays stepped in lockstep; a ray that
    leaves the grid scores ``max_range``. The start cell being blocked
    yields 0.
    """
    blocked = np.asarray(blocked, dtype=np.uint8)
    h, w = blocked.shape
    k = len(bearings)
    fx = (x0 - origin_x) / resolution
    fy = (y0 - origin_y) / resolution
    ix = np.full(k, int(np.floor(fx)), dtype=np.int64)
    iy = np.full(k, int(np.floor(fy)), dtype=np.int64)

    out = np.full(k, max_range)
    if not (0 <= ix[0] < w and 0 <= iy[0] < h):
        raise ValueError("ray origin outside grid bounds")
    if blocked[iy[0], ix[0]]:
        return np.zeros(k)

    dirx = np.cos(bearings)
    diry = np.sin(bearings)
    stepx = np.where(dirx > 0, 1, -1).astype(np.int64)
    stepy = np.where(diry > 0, 1, -1).astype(np.int64)
    with np.errstate(divide="ignore"):
        tdx = np.abs(resolution / dirx)
        tdy = np.abs(resolution / diry)
    nextx = np.where(dirx > 0, ix + 1, ix).astype(np.float64)
    nexty = np.where(diry > 0, iy + 1, iy).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        tmx = np.where(dirx != 0, (nextx - fx) * resolution / dirx, np.inf)
        tmy = np.where(diry != 0, (nexty - fy) * resolution / diry, np.inf)

    active = np.ones(k, dtype=bool)
    while active.any():
        usex = active & (tmx < tmy)
        usey = active & ~usex
        t_entry = np.where(usex, tmx, tmy)
        ix = np.where(usex, ix + stepx, ix)
        iy = np.where(usey, iy + stepy, iy)
        tmx = np.where(usex, tmx + tdx, tmx)
        tmy = np.where(usey, tmy + tdy, tmy)

        over = active & (t_entry >= max_range)
        active &= ~over

        off = active & ((ix < 0) | (ix >= w) | (iy < 0) | (iy >= h))
        active &= ~off

        if active.any():
            hit = np.zeros(k, dtype=bool)
            hit[active] = blocked[iy[active], ix[active]] != 0
            out[hit] = np.minimum(t_entry[hit], max_range)
            active &= ~hit
    return out
