"""Rigid pose estimation from correspondences and evaluation metrics.

The pose solve is the classic least-squares fitting of two 3-D point
sets (Arun et al., 1987): subtract centroids, build the 3x3
cross-covariance, take its SVD, and correct the sign so the rotation is
proper.  Matching failure (not enough structure in the scene) is a
first-class result rather than an exception, so batch runs can record
it and continue.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import extraction, matching
from .descriptor import generate_descriptors
from .matching import MatchPair, PointCorrespondence
from .scan_io import LidarScan


class DegenerateGeometryError(ValueError):
    """Correspondences do not constrain a unique rigid transform."""


@dataclass(frozen=True, eq=False)
class RigidPose:
    rotation: np.ndarray     # (3, 3), orthonormal, det +1
    translation: np.ndarray  # (3,), meters

    @classmethod
    def identity(cls) -> "RigidPose":
        return cls(rotation=np.eye(3), translation=np.zeros(3))

    @classmethod
    def from_yaw_deg(cls, yaw_deg: float, translation=(0.0, 0.0, 0.0)) -> "RigidPose":
        return cls(rotation=rotation_about_z(yaw_deg),
                   translation=np.asarray(translation, dtype=np.float64))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def compose(self, other: "RigidPose") -> "RigidPose":
        """Pose equivalent to applying ``other`` first, then this pose."""
        return RigidPose(rotation=self.rotation @ other.rotation,
                         translation=self.rotation @ other.translation + self.translation)

    def inverse(self) -> "RigidPose":
        rt = self.rotation.T
        return RigidPose(rotation=rt, translation=-rt @ self.translation)

    def matrix34(self) -> np.ndarray:
        return np.hstack([self.rotation, self.translation.reshape(3, 1)])

    def validate(self, tol: float = 1e-9) -> None:
        r = self.rotation
        assert np.allclose(r.T @ r, np.eye(3), atol=tol)
        assert abs(np.linalg.det(r) - 1.0) < tol


def rotation_about_z(yaw_deg: float) -> np.ndarray:
    a = math.radians(yaw_deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(eq=False)
class RegistrationResult:
    success: bool
    pose: RigidPose | None
    num_matches: int
    num_correspondences: int
    num_inliers: int
    rms_residual: float
    time_ms: float
    failure_reason: str | None = None


def solve_rigid(points_a: np.ndarray, points_b: np.ndarray) -> RigidPose:
    """Rotation and translation minimizing sum ||R a_i + t - b_i||^2."""
    a = np.asarray(points_a, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(points_b, dtype=np.float64).reshape(-1, 3)
    if a.shape != b.shape:
        raise ValueError("point sets differ in shape")
    if a.shape[0] < 3:
        raise ValueError("need at least 3 correspondences")
    centroid_a = a.mean(axis=0)
    centroid_b = b.mean(axis=0)
    h = (a - centroid_a).T @ (b - centroid_b)
    u, s, vt = np.linalg.svd(h)
    if s[0] == 0.0 or s[1] <= s[0] * 1e-9:
        raise DegenerateGeometryError(
            f"cross-covariance is rank-deficient (singular values {s.tolist()}); "
            "points are collinear or coincident")
    v = vt.T
    d = np.sign(np.linalg.det(v @ u.T))
    rotation = v @ np.diag([1.0, 1.0, d]) @ u.T
    translation = centroid_b - rotation @ centroid_a
    return RigidPose(rotation=rotation, translation=translation)


def solve_pose_svd(correspondences: list[PointCorrespondence]) -> RigidPose:
    """Pose solve over edge-point correspondences."""
    a = np.array([c.point_a for c in correspondences], dtype=np.float64).reshape(-1, 3)
    b = np.array([c.point_b for c in correspondences], dtype=np.float64).reshape(-1, 3)
    return solve_rigid(a, b)


def _residuals(pose: RigidPose, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(pose.apply(a) - b, axis=1)


def _match_confidence(pair: MatchPair, desc_a, desc_b) -> float:
    """Score normalized by the larger non-zero-dimension count, in [0, 1]."""
    denom = max(desc_a[pair.index_a].nonzero_dims(), desc_b[pair.index_b].nonzero_dims())
    return pair.score / denom if denom else 0.0


def _ransac_pose(a: np.ndarray, b: np.ndarray, seed: int,
                 iterations: int = 200, inlier_dist: float = 0.5):
    rng = np.random.default_rng(seed)
    n = a.shape[0]
    best_mask = None
    best_count = 0
    for _ in range(iterations):
        pick = rng.choice(n, size=3, replace=False)
        try:
            pose = solve_rigid(a[pick], b[pick])
        except (ValueError, DegenerateGeometryError):
            continue
        mask = _residuals(pose, a, b) <= inlier_dist
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask
    if best_mask is None or best_count < 3:
        raise DegenerateGeometryError("no consensus set found")
    return solve_rigid(a[best_mask], b[best_mask]), best_mask


def register_scans(scan_a: LidarScan, scan_b: LidarScan, config) -> RegistrationResult:
    """Full pipeline: extract, describe, match, expand, solve.

    Matches below the confidence threshold are dropped; the pose is
    solved, then re-solved once on the correspondences whose residual is
    within 3x the median.  Fewer than 3 surviving correspondences (or a
    degenerate geometry) yields a failure result with no pose.
    """
    start = time.perf_counter()

    def fail(reason: str, matches=0, corrs=0) -> RegistrationResult:
        return RegistrationResult(
            success=False, pose=None, num_matches=matches, num_correspondences=corrs,
            num_inliers=0, rms_residual=float("nan"),
            time_ms=(time.perf_counter() - start) * 1e3, failure_reason=reason)

    threads = config.threads
    edges_a = extraction.extract_edge_points(scan_a, config.extractor, threads=threads)
    edges_b = extraction.extract_edge_points(scan_b, config.extractor, threads=threads)
    clusters_a, keypoints_a = extraction.aggregate_keypoints(edges_a, config.extractor)
    clusters_b, keypoints_b = extraction.aggregate_keypoints(edges_b, config.extractor)
    desc_a = generate_descriptors(keypoints_a, config.descriptor, threads=threads)
    desc_b = generate_descriptors(keypoints_b, config.descriptor, threads=threads)
    pairs = matching.match(desc_a, desc_b, config.matcher)

    confident = [p for p in pairs
                 if _match_confidence(p, desc_a, desc_b) >= config.confidence_threshold]
    if config.use_centroids:
        a = np.array([keypoints_a[p.index_a].centroid for p in confident]).reshape(-1, 3)
        b = np.array([keypoints_b[p.index_b].centroid for p in confident]).reshape(-1, 3)
        n_corr = len(confident)
    else:
        correspondences = matching.expand_to_edge_matches(confident, clusters_a, clusters_b)
        a = np.array([c.point_a for c in correspondences]).reshape(-1, 3)
        b = np.array([c.point_b for c in correspondences]).reshape(-1, 3)
        n_corr = len(correspondences)

    if n_corr < 3:
        return fail("matching failure: fewer than 3 correspondences",
                    matches=len(pairs), corrs=n_corr)
    try:
        if config.use_ransac:
            pose, keep = _ransac_pose(a, b, seed=config.seed)
        else:
            pose = solve_rigid(a, b)
            residuals = _residuals(pose, a, b)
            cutoff = max(3.0 * float(np.median(residuals)), 1e-9)
            keep = residuals <= cutoff
            if int(keep.sum()) >= 3:
                pose = solve_rigid(a[keep], b[keep])
            else:
                keep = np.ones(n_corr, dtype=bool)
    except DegenerateGeometryError as err:
        return fail(f"degenerate geometry: {err}", matches=len(pairs), corrs=n_corr)

    final_residuals = _residuals(pose, a[keep], b[keep])
    return RegistrationResult(
        success=True, pose=pose, num_matches=len(pairs), num_correspondences=n_corr,
        num_inliers=int(keep.sum()),
        rms_residual=float(np.sqrt(np.mean(final_residuals ** 2))),
        time_ms=(time.perf_counter() - start) * 1e3)


def rotation_error(r: np.ndarray, r_gt: np.ndarray) -> float:
    """Chordal rotation error in degrees: 2 asin(||R - Rgt||_F / sqrt(8))."""
    frob = np.linalg.norm(np.asarray(r, dtype=np.float64) - np.asarray(r_gt, dtype=np.float64))
    arg = min(max(frob / math.sqrt(8.0), 0.0), 1.0)
    return math.degrees(2.0 * math.asin(arg))


def translation_error(t: np.ndarray, t_gt: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(t, dtype=np.float64) - np.asarray(t_gt, dtype=np.float64)))


def trajectory_rmse(estimated: list[RigidPose], ground_truth: list[RigidPose]) -> float:
    """Root-mean-square translation of gt_i^-1 * est_i over a trajectory."""
    if len(estimated) != len(ground_truth):
        raise ValueError("trajectory lengths differ")
    if not estimated:
        raise ValueError("empty trajectories")
    total = 0.0
    for est, gt in zip(estimated, ground_truth):
        delta = gt.inverse().compose(est)
        total += float(delta.translation @ delta.translation)
    return math.sqrt(total / len(estimated))


def format_pose_line(pose: RigidPose) -> str:
    """Row-major 3x4 [R|t] as 12 numbers, the common odometry file layout."""
    return " ".join(repr(float(v)) for v in pose.matrix34().reshape(12))


def write_poses(poses: list[RigidPose], path) -> None:
    with open(path, "w") as fh:
        for pose in poses:
            fh.write(format_pose_line(pose) + "\n")


def read_poses(path) -> list[RigidPose]:
    poses = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        values = np.array([float(v) for v in line.split()], dtype=np.float64)
        if values.shape[0] != 12:
            raise ValueError(f"{path}: pose lines must have 12 numbers")
        m = values.reshape(3, 4)
        poses.append(RigidPose(rotation=m[:, :3], translation=m[:, 3]))
    return poses
