"""Grid-scan hot kernels.

These inner loops dominate world stepping at paper scale (600x600 cells,
60 robots). Each kernel has a numba @njit build and a pure-numpy build;
set LSAI_PURE_NUMPY=1 to force the numpy path (both produce identical
results, see tests and benchmarks/bench_kernels.py).
"""

import os

import numpy as np

USE_NUMBA = os.environ.get("LSAI_PURE_NUMPY", "0") != "1"
if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False


def _disk_cells_loop(x, y, radius, n_cells, cell_size):
    # cells whose centers lie within `radius` of (x, y); flat index = iy*n + ix
    out = np.empty(n_cells * n_cells, dtype=np.int64)
    k = 0
    lo_x = max(0, int((x - radius) / cell_size) - 1)
    hi_x = min(n_cells - 1, int((x + radius) / cell_size) + 1)
    lo_y = max(0, int((y - radius) / cell_size) - 1)
    hi_y = min(n_cells - 1, int((y + radius) / cell_size) + 1)
    r2 = radius * radius
    for iy in range(lo_y, hi_y + 1):
        cy = (iy + 0.5) * cell_size
        for ix in range(lo_x, hi_x + 1):
            cx = (ix + 0.5) * cell_size
            d2 = (cx - x) * (cx - x) + (cy - y) * (cy - y)
            if d2 <= r2:
                out[k] = iy * n_cells + ix
                k += 1
    return out[:k]


def _disk_cells_numpy(x, y, radius, n_cells, cell_size):
    lo_x = max(0, int((x - radius) / cell_size) - 1)
    hi_x = min(n_cells - 1, int((x + radius) / cell_size) + 1)
    lo_y = max(0, int((y - radius) / cell_size) - 1)
    hi_y = min(n_cells - 1, int((y + radius) / cell_size) + 1)
    ix = np.arange(lo_x, hi_x + 1)
    iy = np.arange(lo_y, hi_y + 1)
    cx = (ix + 0.5) * cell_size
    cy = (iy + 0.5) * cell_size
    d2 = (cx[None, :] - x) ** 2 + (cy[:, None] - y) ** 2
    yy, xx = np.nonzero(d2 <= radius * radius)
    return ((iy[yy] * n_cells) + ix[xx]).astype(np.int64)


def _collision_pairs_loop(xs, ys, d_min):
    n = xs.shape[0]
    out = np.empty((n * (n - 1) // 2, 2), dtype=np.int64)
    k = 0
    d2 = d_min * d_min
    for i in range(n):
        for j in range(i + 1, n):
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            if dx * dx + dy * dy < d2:
                out[k, 0] = i
                out[k, 1] = j
                k += 1
    return out[:k]


def _collision_pairs_numpy(xs, ys, d_min):
    dx = xs[:, None] - xs[None, :]
    dy = ys[:, None] - ys[None, :]
    close = dx * dx + dy * dy < d_min * d_min
    i, j = np.nonzero(np.triu(close, k=1))
    return np.stack([i, j], axis=1).astype(np.int64)


def _nearest_open_cell_loop(x, y, open_mask, n_cells, cell_size):
    # (dx, dy, dist) from (x, y) to the nearest cell center with open_mask true;
    # dist = -1 when no such cell exists
    best = np.inf
    bx = 0.0
    by = 0.0
    found = False
    for iy in range(n_cells):
        cy = (iy + 0.5) * cell_size
        row = iy * n_cells
        for ix in range(n_cells):
            if open_mask[row + ix]:
                cx = (ix + 0.5) * cell_size
                d2 = (cx - x) * (cx - x) + (cy - y) * (cy - y)
                if d2 < best:
                    best = d2
                    bx = cx
                    by = cy
                    found = True
    if not found:
        return 0.0, 0.0, -1.0
    return bx - x, by - y, np.sqrt(best)


def _nearest_open_cell_numpy(x, y, open_mask, n_cells, cell_size):
    idx = np.nonzero(open_mask)[0]
    if idx.size == 0:
        return 0.0, 0.0, -1.0
    cx = ((idx % n_cells) + 0.5) * cell_size
    cy = ((idx // n_cells) + 0.5) * cell_size
    d2 = (cx - x) ** 2 + (cy - y) ** 2
    k = int(np.argmin(d2))
    return cx[k] - x, cy[k] - y, float(np.sqrt(d2[k]))


if USE_NUMBA:
    disk_cells = njit(cache=True)(_disk_cells_loop)
    collision_pairs = njit(cache=True)(_collision_pairs_loop)
    nearest_open_cell = njit(cache=True)(_nearest_open_cell_loop)
else:
    disk_cells = _disk_cells_numpy
    collision_pairs = _collision_pairs_numpy
    nearest_open_cell = _nearest_open_cell_numpy
