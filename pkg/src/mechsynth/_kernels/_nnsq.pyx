# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled nearest-neighbour kernel for 2D point sets."""
import numpy as np

BACKEND = "compiled"


def nn_sqdist(const double[:, ::1] query, const double[:, ::1] ref):
    """For each query point, squared distance to and index of its nearest
    point in ``ref``. Ties resolve to the lowest index."""
    cdef Py_ssize_t n = query.shape[0]
    cdef Py_ssize_t m = ref.shape[0]
    d2_arr = np.empty(n, dtype=np.float64)
    idx_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] d2 = d2_arr
    cdef long long[::1] idx = idx_arr
    cdef Py_ssize_t i, j, bj
    cdef double qx, qy, dx, dy, d, best
    with nogil:
        for i in range(n):
            qx = query[i, 0]
            qy = query[i, 1]
            best = -1.0
            bj = 0
            for j in range(m):
                dx = qx - ref[j, 0]
                dy = qy - ref[j, 1]
                d = dx * dx + dy * dy
                if best < 0.0 or d < best:
                    best = d
                    bj = j
            d2[i] = best
            idx[i] = bj
    return d2_arr, idx_arr
