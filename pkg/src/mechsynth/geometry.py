"""2D point-set primitives: trajectories, rigid transforms, Chamfer, ICP."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import nn_sqdist


class DegenerateGeometryError(ValueError):
    """Raised when a point set is too degenerate for the requested operation."""


def _as_point_array(obj, what="trajectory"):
    if isinstance(obj, Trajectory):
        return obj.points
    pts = np.asarray(obj, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"{what} must be an (n, 2) point array, got shape {pts.shape}")
    if pts.shape[0] == 0:
        raise ValueError(f"{what} is empty")
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{what} contains non-finite coordinates")
    return pts


@dataclass(eq=False)
class Trajectory:
    """An ordered, non-empty sequence of finite 2D points.

    ``closed`` marks traces that return to their start (full crank cycles,
    closed target curves). The point array is copied and frozen on
    construction, so instances are safe to share across threads.
    """

    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"trajectory points must be (n, 2), got shape {pts.shape}")
        if pts.shape[0] == 0:
            raise ValueError("trajectory is empty")
        if not np.all(np.isfinite(pts)):
            raise ValueError("trajectory contains non-finite coordinates")
        pts.setflags(write=False)
        self.points = pts

    def __len__(self):
        return self.points.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.closed == other.closed and np.array_equal(self.points, other.points)


_ORTHO_TOL = 1e-12


@dataclass(eq=False)
class RigidTransform2:
    """Orientation-preserving rigid map p -> R @ p + t."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=np.float64, copy=True)
        tr = np.array(self.translation, dtype=np.float64, copy=True).reshape(2)
        if rot.shape != (2, 2):
            raise ValueError("rotation must be a 2x2 matrix")
        if not np.allclose(rot.T @ rot, np.eye(2), atol=_ORTHO_TOL, rtol=0.0):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(rot) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation must have determinant +1 (no reflections)")
        rot.setflags(write=False)
        tr.setflags(write=False)
        self.rotation = rot
        self.translation = tr

    @classmethod
    def identity(cls) -> "RigidTransform2":
        return cls(np.eye(2), np.zeros(2))

    @classmethod
    def from_angle(cls, theta: float, tx: float = 0.0, ty: float = 0.0) -> "RigidTransform2":
        c, s = np.cos(theta), np.sin(theta)
        return cls(np.array([[c, -s], [s, c]]), np.array([tx, ty]))

    @property
    def angle(self) -> float:
        return float(np.arctan2(self.rotation[1, 0], self.rotation[0, 0]))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform2") -> "RigidTransform2":
        """self after other: (self ∘ other)(p) = self(other(p))."""
        return RigidTransform2(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )


def apply_transform(transform: RigidTransform2, traj: Trajectory) -> Trajectory:
    """Map every point; order and the closed flag are preserved."""
    return Trajectory(transform.apply(traj.points), closed=traj.closed)


def chamfer_distance(p, q) -> float:
    """Bidirectional mean of squared nearest-neighbour distances.

    Each direction is normalised by its own set size; no square root is
    taken. Symmetric, and zero exactly when every point of each set
    coincides with a point of the other.
    """
    pa = _as_point_array(p, "first trajectory")
    qa = _as_point_array(q, "second trajectory")
    d2_pq, _ = nn_sqdist(pa, qa)
    d2_qp, _ = nn_sqdist(qa, pa)
    return float(d2_pq.mean() + d2_qp.mean())


def _fit_rigid(source: np.ndarray, target: np.ndarray) -> RigidTransform2:
    """Least-squares rigid fit mapping source onto target (SVD, det-corrected)."""
    sc = source.mean(axis=0)
    tc = target.mean(axis=0)
    h = (source - sc).T @ (target - tc)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0:
        d = 1.0
    corr = np.diag([1.0, d])
    rot = vt.T @ corr @ u.T
    return RigidTransform2(rot, tc - rot @ sc)


@dataclass
class IcpResult:
    transform: RigidTransform2
    aligned: Trajectory
    chamfer: float
    objectives: list = field(default_factory=list)


def icp_align(source, target, max_iters: int = 100, tol: float = 1e-9) -> IcpResult:
    """Rigidly align source to target by iterative closest point.

    Seeds with centroid alignment, then alternates nearest-neighbour
    correspondence with a closed-form SVD rigid fit until the mean squared
    correspondence error improves by less than ``tol`` or ``max_iters`` is
    reached. Updates that do not improve the objective are discarded, so
    ``objectives`` is non-increasing by construction.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    src_traj = source if isinstance(source, Trajectory) else Trajectory(np.asarray(source))
    tgt = _as_point_array(target, "target")
    src = src_traj.points
    if src.shape[0] < 3 or tgt.shape[0] < 3:
        raise ValueError("icp_align requires at least 3 points per trajectory")
    if np.unique(np.round(src / max(1.0, np.abs(src).max()), 12), axis=0).shape[0] < 3:
        raise DegenerateGeometryError("source has fewer than 3 distinct points")

    transform = RigidTransform2(np.eye(2), tgt.mean(axis=0) - src.mean(axis=0))
    moved = transform.apply(src)
    objective = float(nn_sqdist(moved, tgt)[0].mean())
    objectives = [objective]

    for _ in range(max_iters):
        _, idx = nn_sqdist(moved, tgt)
        step = _fit_rigid(moved, tgt[idx])
        candidate = step.compose(transform)
        cand_moved = candidate.apply(src)
        cand_obj = float(nn_sqdist(cand_moved, tgt)[0].mean())
        if cand_obj >= objective:
            break
        improvement = objective - cand_obj
        transform, moved, objective = candidate, cand_moved, cand_obj
        objectives.append(objective)
        if improvement < tol:
            break

    aligned = Trajectory(moved, closed=src_traj.closed)
    return IcpResult(transform, aligned, chamfer_distance(aligned, tgt), objectives)
