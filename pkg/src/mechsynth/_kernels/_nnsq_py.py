"""Numpy fallback for the nearest-neighbour kernel.

Kept arithmetically identical to the compiled version: squared distances are
computed as dx*dx + dy*dy per pair and ties resolve to the lowest index
(np.argmin semantics), so both backends return bit-equal results.
"""
import numpy as np

BACKEND = "numpy"

# Cap the (chunk, m) scratch matrix at ~2M doubles (16 MB).
_CHUNK_BUDGET = 2_000_000


def nn_sqdist(query, ref):
    n = query.shape[0]
    m = ref.shape[0]
    d2 = np.empty(n, dtype=np.float64)
    idx = np.empty(n, dtype=np.int64)
    step = max(1, _CHUNK_BUDGET // max(m, 1))
    for s in range(0, n, step):
        q = query[s : s + step]
        dx = q[:, 0, None] - ref[None, :, 0]
        dy = q[:, 1, None] - ref[None, :, 1]
        dist = dx * dx + dy * dy
        j = np.argmin(dist, axis=1)
        idx[s : s + step] = j
        d2[s : s + step] = dist[np.arange(len(q)), j]
    return d2, idx
