"""Nearest-neighbour kernels with a compiled core and a numpy fallback.

The compiled extension is picked at import time when present; set
``MECHSYNTH_PURE_PYTHON=1`` to force the numpy fallback. Reference sets
larger than ``GRID_THRESHOLD`` points go through a uniform-grid bucket
search instead of the exhaustive kernel.
"""
import os

import numpy as np

if os.environ.get("MECHSYNTH_PURE_PYTHON"):
    from . import _nnsq_py as _impl
else:
    try:
        from . import _nnsq as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _nnsq_py as _impl

BACKEND = _impl.BACKEND

GRID_THRESHOLD = 1000


def _as_points(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) point array, got shape {a.shape}")
    return a


def nn_sqdist_brute(query, ref):
    """Exhaustive nearest neighbour: (sqdist, index) per query point."""
    return _impl.nn_sqdist(_as_points(query), _as_points(ref))


def nn_sqdist(query, ref):
    """Nearest neighbour with automatic grid acceleration for large refs."""
    query = _as_points(query)
    ref = _as_points(ref)
    if ref.shape[0] > GRID_THRESHOLD:
        return _grid_nn(query, ref)
    return _impl.nn_sqdist(query, ref)


def _grid_nn(query, ref):
    """Uniform-grid bucket search, exact (same arithmetic as brute force)."""
    lo = ref.min(axis=0)
    hi = ref.max(axis=0)
    extent = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    if extent <= 0.0 or not np.isfinite(extent):
        return _impl.nn_sqdist(query, ref)
    # ~4 reference points per occupied cell on average
    ncells = max(1, int(np.sqrt(ref.shape[0] / 4.0)))
    cell = extent / ncells

    cx = np.floor((ref[:, 0] - lo[0]) / cell).astype(np.int64)
    cy = np.floor((ref[:, 1] - lo[1]) / cell).astype(np.int64)
    buckets: dict[tuple[int, int], list[int]] = {}
    for i in range(ref.shape[0]):
        buckets.setdefault((int(cx[i]), int(cy[i])), []).append(i)
    cx_min, cx_max = int(cx.min()), int(cx.max())
    cy_min, cy_max = int(cy.min()), int(cy.max())

    n = query.shape[0]
    d2 = np.empty(n, dtype=np.float64)
    idx = np.empty(n, dtype=np.int64)
    for i in range(n):
        qx, qy = query[i]
        gx = int(np.floor((qx - lo[0]) / cell))
        gy = int(np.floor((qy - lo[1]) / cell))
        max_ring = max(
            abs(gx - cx_min), abs(gx - cx_max), abs(gy - cy_min), abs(gy - cy_max)
        )
        best = np.inf
        best_j = -1
        for r in range(max_ring + 1):
            # After rings 0..r-1, every unvisited point is >= (r-1)*cell away.
            if best_j >= 0 and r >= 1 and best <= ((r - 1) * cell) ** 2:
                break
            cand: list[int] = []
            if r == 0:
                cand = buckets.get((gx, gy), [])
            else:
                for ox in range(-r, r + 1):
                    for oy in (-r, r):
                        cand += buckets.get((gx + ox, gy + oy), [])
                for oy in range(-r + 1, r):
                    for ox in (-r, r):
                        cand += buckets.get((gx + ox, gy + oy), [])
            if not cand:
                continue
            cj = np.asarray(cand, dtype=np.int64)
            dx = qx - ref[cj, 0]
            dy = qy - ref[cj, 1]
            dist = dx * dx + dy * dy
            dmin = float(dist.min())
            jmin = int(cj[dist == dmin].min())
            if dmin < best or (dmin == best and jmin < best_j):
                best = dmin
                best_j = jmin
        d2[i] = best
        idx[i] = best_j
    return d2, idx
