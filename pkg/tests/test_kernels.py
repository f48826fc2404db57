import numpy as np
import pytest

from mechsynth import _kernels
from mechsynth._kernels import _nnsq_py
from mechsynth.rng import SplitMix64

from conftest import random_points


def brute_nn(query, ref):
    """Independent O(n*m) oracle via the full distance matrix."""
    diff = query[:, None, :] - ref[None, :, :]
    d2 = (diff**2).sum(axis=2)
    return d2.min(axis=1), d2.argmin(axis=1)


def test_backend_reports_name():
    assert _kernels.BACKEND in ("compiled", "numpy")


@pytest.mark.parametrize("sizes", [(1, 1), (7, 3), (57, 143), (200, 200)])
def test_nn_matches_brute_oracle(sizes, rng):
    q = random_points(rng, sizes[0])
    r = random_points(rng, sizes[1])
    d2, idx = _kernels.nn_sqdist(q, r)
    od2, oidx = brute_nn(q, r)
    assert np.array_equal(d2, od2)
    assert np.array_equal(idx, oidx)


def test_numpy_fallback_bit_identical_to_active_backend(rng):
    q = np.ascontiguousarray(random_points(rng, 80))
    r = np.ascontiguousarray(random_points(rng, 120))
    d2a, idxa = _kernels.nn_sqdist_brute(q, r)
    d2b, idxb = _nnsq_py.nn_sqdist(q, r)
    assert np.array_equal(d2a, d2b)
    assert np.array_equal(idxa, idxb)


def test_fallback_chunking_consistent(rng):
    q = np.ascontiguousarray(random_points(rng, 500))
    r = np.ascontiguousarray(random_points(rng, 30))
    old = _nnsq_py._CHUNK_BUDGET
    try:
        _nnsq_py._CHUNK_BUDGET = 64  # force many chunks
        d2a, idxa = _nnsq_py.nn_sqdist(q, r)
    finally:
        _nnsq_py._CHUNK_BUDGET = old
    d2b, idxb = _nnsq_py.nn_sqdist(q, r)
    assert np.array_equal(d2a, d2b)
    assert np.array_equal(idxa, idxb)


def test_grid_path_equals_brute_force(rng):
    ref = random_points(rng, 1500, -5, 5)
    q = random_points(rng, 400, -6, 6)
    assert ref.shape[0] > _kernels.GRID_THRESHOLD
    d2g, idxg = _kernels.nn_sqdist(q, ref)
    d2b, idxb = _kernels.nn_sqdist_brute(q, ref)
    assert np.array_equal(d2g, d2b)
    assert np.array_equal(idxg, idxb)


def test_grid_path_queries_far_outside(rng):
    ref = random_points(rng, 1200, -1, 1)
    q = random_points(rng, 50, 50, 60)
    d2g, idxg = _kernels.nn_sqdist(q, ref)
    d2b, idxb = _kernels.nn_sqdist_brute(q, ref)
    assert np.array_equal(d2g, d2b)
    assert np.array_equal(idxg, idxb)


def test_grid_path_degenerate_ref():
    ref = np.zeros((1200, 2))
    q = np.array([[1.0, 1.0], [0.0, 0.0]])
    d2, idx = _kernels.nn_sqdist(q, ref)
    assert d2[0] == 2.0 and d2[1] == 0.0


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        _kernels.nn_sqdist(np.zeros((3, 3)), np.zeros((3, 2)))
