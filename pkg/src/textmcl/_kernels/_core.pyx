# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot-loop kernels: distance transform, batch endpoint scoring,
grid raycasting. Mirrors the NumPy backend in ``_core_py.py``; both must
produce the same values (cross-checked by the test suite)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, floor, INFINITY

cnp.import_array()

DEF BIG = 1e20


cdef void _dt_1d(double[::1] f, double[::1] d, Py_ssize_t[::1] v,
                 double[::1] z, Py_ssize_t n) noexcept nogil:
    # 1D squared-distance transform via the lower envelope of parabolas
    # rooted at (q, f[q]).
    cdef Py_ssize_t k = 0, q
    cdef double s
    v[0] = 0
    z[0] = -INFINITY
    z[1] = INFINITY
    for q in range(1, n):
        while True:
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
            if s <= z[k]:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = INFINITY
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        s = q - v[k]
        d[q] = s * s + f[v[k]]


def edt_sq_cells(occ):
    """Exact squared Euclidean distance (cell units) to the nearest
    nonzero cell; rows then columns of 1D transforms."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] o = np.ascontiguousarray(occ, dtype=np.uint8)
    cdef Py_ssize_t h = o.shape[0], w = o.shape[1]
    cdef Py_ssize_t n = h if h > w else w
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((h, w))
    cdef double[:, ::1] g = out
    cdef double[::1] f = np.empty(n)
    cdef double[::1] d = np.empty(n)
    cdef Py_ssize_t[::1] v = np.empty(n, dtype=np.intp)
    cdef double[::1] z = np.empty(n + 1)
    cdef Py_ssize_t i, j

    with nogil:
        for i in range(h):
            for j in range(w):
                f[j] = 0.0 if o[i, j] else BIG
            _dt_1d(f, d, v, z, w)
            for j in range(w):
                g[i, j] = d[j] if d[j] < BIG else BIG
        for j in range(w):
            for i in range(h):
                f[i] = g[i, j]
            _dt_1d(f, d, v, z, h)
            for i in range(h):
                g[i, j] = d[i] if d[i] < BIG else BIG
    return out


def scan_log_weights(dist, double origin_x, double origin_y, double resolution,
                     double r_max, poses, ex, ey, double inv_two_sigma_sq,
                     double log_floor):
    """Log geometric-mean endpoint likelihood for a batch of poses."""
    cdef double[:, ::1] dd = np.ascontiguousarray(dist, dtype=np.float64)
    cdef double[:, ::1] pp = np.ascontiguousarray(poses, dtype=np.float64)
    cdef double[::1] exv = np.ascontiguousarray(ex, dtype=np.float64)
    cdef double[::1] eyv = np.ascontiguousarray(ey, dtype=np.float64)
    cdef Py_ssize_t h = dd.shape[0], w = dd.shape[1]
    cdef Py_ssize_t n = pp.shape[0], k = exv.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j
    cdef double c, s, px, py, wx, wy, dmet, term, acc, inv_res
    cdef Py_ssize_t cx, cy

    inv_res = 1.0 / resolution
    with nogil:
        for i in range(n):
            c = cos(pp[i, 2])
            s = sin(pp[i, 2])
            px = pp[i, 0]
            py = pp[i, 1]
            acc = 0.0
            for j in range(k):
                wx = px + c * exv[j] - s * eyv[j]
                wy = py + s * exv[j] + c * eyv[j]
                cx = <Py_ssize_t>floor((wx - origin_x) * inv_res)
                cy = <Py_ssize_t>floor((wy - origin_y) * inv_res)
                if 0 <= cx < w and 0 <= cy < h:
                    dmet = dd[cy, cx]
                else:
                    dmet = r_max
                term = -(dmet * dmet) * inv_two_sigma_sq
                if term < log_floor:
                    term = log_floor
                acc += term
            ov[i] = acc / k
    return out


def raycast_grid(blocked, double origin_x, double origin_y, double resolution,
                 double x0, double y0, bearings, double max_range):
    """Distance to the first blocked-cell boundary per bearing, or
    ``max_range``; integer grid traversal."""
    cdef cnp.uint8_t[:, ::1] b = np.ascontiguousarray(blocked, dtype=np.uint8)
    cdef double[::1] bv = np.ascontiguousarray(bearings, dtype=np.float64)
    cdef Py_ssize_t h = b.shape[0], w = b.shape[1]
    cdef Py_ssize_t k = bv.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(k)
    cdef double[::1] ov = out
    cdef double fx = (x0 - origin_x) / resolution
    cdef double fy = (y0 - origin_y) / resolution
    cdef Py_ssize_t ix0 = <Py_ssize_t>floor(fx)
    cdef Py_ssize_t iy0 = <Py_ssize_t>floor(fy)
    cdef Py_ssize_t i, ix, iy, stepx, stepy
    cdef double dirx, diry, tdx, tdy, tmx, tmy, t_entry

    if not (0 <= ix0 < w and 0 <= iy0 < h):
        raise ValueError("ray origin outside grid bounds")
    if b[iy0, ix0]:
        out[:] = 0.0
        return out

    with nogil:
        for i in range(k):
            dirx = cos(bv[i])
            diry = sin(bv[i])
            stepx = 1 if dirx > 0 else -1
            stepy = 1 if diry > 0 else -1
            ix = ix0
            iy = iy0
            if dirx != 0:
                tdx = resolution / dirx
                if tdx < 0:
                    tdx = -tdx
                tmx = ((ix + (1 if dirx > 0 else 0)) - fx) * resolution / dirx
            else:
                tdx = INFINITY
                tmx = INFINITY
            if diry != 0:
                tdy = resolution / diry
                if tdy < 0:
                    tdy = -tdy
                tmy = ((iy + (1 if diry > 0 else 0)) - fy) * resolution / diry
            else:
                tdy = INFINITY
                tmy = INFINITY

            ov[i] = max_range
            while True:
                if tmx < tmy:
                    t_entry = tmx
                    ix += stepx
                    tmx += tdx
                else:
                    t_entry = tmy
                    iy += stepy
                    tmy += tdy
                if t_entry >= max_range:
                    break
                if ix < 0 or ix >= w or iy < 0 or iy >= h:
                    break
                if b[iy, ix]:
                    ov[i] = t_entry
                    break
    return out
