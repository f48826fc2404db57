import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mechsynth.geometry import (
    DegenerateGeometryError,
    RigidTransform2,
    Trajectory,
    apply_transform,
    chamfer_distance,
    icp_align,
)
from mechsynth.rng import SplitMix64

from conftest import circle_samples, ellipse_samples, random_points


def brute_chamfer(p, q):
    diff_pq = ((p[:, None, :] - q[None, :, :]) ** 2).sum(axis=2)
    diff_qp = ((q[:, None, :] - p[None, :, :]) ** 2).sum(axis=2)
    return diff_pq.min(axis=1).mean() + diff_qp.min(axis=1).mean()


class TestTrajectory:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Trajectory(np.zeros((0, 2)))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            Trajectory(np.array([[0.0, np.nan]]))

    def test_points_frozen(self):
        t = Trajectory(np.array([[1.0, 2.0]]))
        with pytest.raises(ValueError):
            t.points[0, 0] = 9.0

    def test_equality(self):
        a = Trajectory(np.array([[1.0, 2.0]]), closed=True)
        b = Trajectory(np.array([[1.0, 2.0]]), closed=True)
        c = Trajectory(np.array([[1.0, 2.0]]), closed=False)
        assert a == b and a != c


class TestRigidTransform:
    def test_rejects_reflection(self):
        with pytest.raises(ValueError):
            RigidTransform2(np.array([[1.0, 0.0], [0.0, -1.0]]), np.zeros(2))

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            RigidTransform2(np.array([[1.0, 0.1], [0.0, 1.0]]), np.zeros(2))

    def test_compose_matches_sequential_apply(self, rng):
        t1 = RigidTransform2.from_angle(0.3, 1.0, -2.0)
        t2 = RigidTransform2.from_angle(-1.1, 0.5, 0.25)
        pts = random_points(rng, 20)
        assert np.allclose(t1.compose(t2).apply(pts), t1.apply(t2.apply(pts)), atol=1e-12)


class TestApplyTransform:
    def test_identity(self):
        p = Trajectory(np.array([[1.0, 2.0], [3.0, 4.0]]), closed=True)
        out = apply_transform(RigidTransform2.identity(), p)
        assert out == p

    def test_rotate_90_about_origin(self):
        out = apply_transform(
            RigidTransform2.from_angle(math.pi / 2), Trajectory(np.array([[1.0, 0.0]]))
        )
        assert np.allclose(out.points, [[0.0, 1.0]], atol=1e-15)

    def test_translation(self):
        out = apply_transform(
            RigidTransform2.from_angle(0.0, 2.0, 3.0),
            Trajectory(np.array([[0.0, 0.0], [1.0, 1.0]])),
        )
        assert np.allclose(out.points, [[2.0, 3.0], [3.0, 4.0]])

    def test_preserves_pairwise_distances(self, rng):
        pts = random_points(rng, 40)
        t = RigidTransform2.from_angle(1.234, -3.0, 0.7)
        moved = t.apply(pts)
        d_before = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
        d_after = np.linalg.norm(moved[:, None] - moved[None, :], axis=2)
        assert np.abs(d_before - d_after).max() < 1e-12


class TestChamfer:
    def test_identical_sets_zero(self):
        p = np.array([[0.0, 0.0], [1.0, 0.0]])
        assert chamfer_distance(p, p) == 0.0

    def test_single_points(self):
        # brute-force oracle: 1^2/1 + 1^2/1
        assert chamfer_distance([[0.0, 0.0]], [[1.0, 0.0]]) == 2.0

    def test_asymmetric_sizes(self):
        # oracle: P->Q (1+1)/2 = 1; Q->P 1/1 = 1
        p = [[0.0, 0.0], [2.0, 0.0]]
        q = [[1.0, 0.0]]
        assert chamfer_distance(p, q) == 2.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            chamfer_distance(np.zeros((0, 2)), [[1.0, 0.0]])

    def test_matches_brute_oracle_randomized(self):
        rng = SplitMix64(17)
        for _ in range(50):
            p = random_points(rng, rng.randint(1, 200))
            q = random_points(rng, rng.randint(1, 200))
            assert abs(chamfer_distance(p, q) - brute_chamfer(p, q)) <= 1e-12

    def test_symmetry_randomized(self):
        rng = SplitMix64(23)
        for _ in range(25):
            p = random_points(rng, rng.randint(1, 60))
            q = random_points(rng, rng.randint(1, 60))
            assert chamfer_distance(p, q) == chamfer_distance(q, p)

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_rigid_invariance(self, seed):
        rng = SplitMix64(seed)
        p = random_points(rng, rng.randint(2, 50))
        q = random_points(rng, rng.randint(2, 50))
        t = RigidTransform2.from_angle(
            rng.uniform(-math.pi, math.pi), rng.uniform(-5, 5), rng.uniform(-5, 5)
        )
        before = chamfer_distance(p, q)
        after = chamfer_distance(t.apply(p), t.apply(q))
        assert abs(before - after) < 1e-9 * max(1.0, before)


class TestIcp:
    def test_already_aligned_identity(self):
        pts = circle_samples(40)
        res = icp_align(pts, pts)
        assert res.chamfer == 0.0
        assert np.allclose(res.transform.rotation, np.eye(2), atol=1e-12)
        assert np.allclose(res.transform.translation, 0.0, atol=1e-12)

    def test_translation_recovery(self):
        target = circle_samples(50, r=1.3)
        source = target + np.array([0.5, -0.3])
        res = icp_align(source, target)
        assert res.chamfer <= 1e-10
        # the recovered transform undoes the known offset
        assert np.allclose(res.transform.translation, [-0.5, 0.3], atol=1e-6)
        assert abs(res.transform.angle) < 1e-6

    def test_rotation_recovery_ellipse(self):
        target = ellipse_samples(100)
        source = RigidTransform2.from_angle(math.radians(10.0)).apply(target)
        res = icp_align(source, target)
        assert res.chamfer <= 1e-8

    def test_objectives_monotone(self):
        rng = SplitMix64(5)
        for _ in range(20):
            target = ellipse_samples(60, a=rng.uniform(1, 3), b=rng.uniform(0.5, 1))
            t = RigidTransform2.from_angle(
                rng.uniform(-0.25, 0.25), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)
            )
            res = icp_align(t.apply(target), target)
            for a, b in zip(res.objectives, res.objectives[1:]):
                assert b <= a

    def test_requires_three_points(self):
        with pytest.raises(ValueError):
            icp_align(np.array([[0.0, 0.0], [1.0, 0.0]]), circle_samples(10))

    def test_degenerate_source_two_distinct_points(self):
        src = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(DegenerateGeometryError):
            icp_align(src, circle_samples(10))

    def test_collinear_but_three_distinct_is_allowed(self):
        src = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        res = icp_align(src, src + np.array([0.1, 0.0]))
        assert res.chamfer <= 1e-12

    def test_aligned_equals_transform_applied_to_source(self):
        target = ellipse_samples(80)
        source = RigidTransform2.from_angle(0.1, 0.2, -0.1).apply(target)
        res = icp_align(source, target)
        assert np.allclose(res.aligned.points, res.transform.apply(source), atol=1e-12)
