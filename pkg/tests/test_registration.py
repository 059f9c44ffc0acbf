import math

import numpy as np
import pytest

from lk3d import oracles
from lk3d.config import PipelineConfig
from lk3d.matching import PointCorrespondence
from lk3d.registration import (DegenerateGeometryError, RigidPose, read_poses,
                               register_scans, rotation_about_z, rotation_error,
                               solve_pose_svd, solve_rigid, trajectory_rmse,
                               translation_error, write_poses)
from lk3d.synth import SceneSpec, generate_scene, transformed_pair


def _random_pose(rng) -> RigidPose:
    yaw = rng.uniform(-180, 180)
    tilt = rotation_about_z(0.0)
    # compose two elementary rotations for a generic orientation
    a = math.radians(rng.uniform(-45, 45))
    pitch = np.array([[math.cos(a), 0, math.sin(a)], [0, 1, 0], [-math.sin(a), 0, math.cos(a)]])
    return RigidPose(rotation=rotation_about_z(yaw) @ pitch,
                     translation=rng.uniform(-5, 5, 3))


def test_solve_identity():
    rng = np.random.default_rng(61)
    pts = rng.uniform(-10, 10, (8, 3))
    pose = solve_rigid(pts, pts)
    assert np.allclose(pose.rotation, np.eye(3), atol=1e-12)
    assert np.allclose(pose.translation, 0.0, atol=1e-12)


def test_solve_known_transform():
    rng = np.random.default_rng(62)
    pts = rng.uniform(-10, 10, (10, 3))
    r0 = rotation_about_z(20.0)
    t0 = np.array([1.0, -2.0, 0.5])
    pose = solve_rigid(pts, pts @ r0.T + t0)
    assert np.allclose(pose.rotation, r0, atol=1e-9)
    assert np.allclose(pose.translation, t0, atol=1e-9)
    pose.validate()


def test_solve_collinear_degenerate():
    pts = np.array([[0.0, 0, 0], [1.0, 1, 1], [2.0, 2, 2]]) + 3.0
    with pytest.raises(DegenerateGeometryError):
        solve_rigid(pts, pts @ rotation_about_z(10.0).T)


def test_solve_too_few_points():
    with pytest.raises(ValueError):
        solve_rigid(np.zeros((2, 3)), np.zeros((2, 3)))


def test_solve_output_is_proper_rotation():
    rng = np.random.default_rng(63)
    for _ in range(20):
        pts = rng.uniform(-10, 10, (6, 3))
        noisy = pts @ _random_pose(rng).rotation.T + rng.normal(0, 0.1, (6, 3))
        pose = solve_rigid(pts, noisy)
        pose.validate()


def test_solve_left_invariance():
    rng = np.random.default_rng(64)
    a = rng.uniform(-10, 10, (12, 3))
    b = a @ rotation_about_z(35.0).T + np.array([0.5, 1.5, -0.2])
    base = solve_rigid(a, b)
    g = _random_pose(rng)
    moved = solve_rigid(g.apply(a), g.apply(b))
    assert np.allclose(moved.rotation, g.rotation @ base.rotation @ g.rotation.T, atol=1e-9)
    want_t = g.rotation @ base.translation + g.translation - \
        (g.rotation @ base.rotation @ g.rotation.T) @ g.translation
    assert np.allclose(moved.translation, want_t, atol=1e-9)


def test_solve_pose_svd_from_correspondences():
    rng = np.random.default_rng(65)
    pts = rng.uniform(-10, 10, (6, 3))
    r0, t0 = rotation_about_z(-12.0), np.array([2.0, 0.0, 1.0])
    corrs = [PointCorrespondence(point_a=p, point_b=r0 @ p + t0, ring=i, source_pair=0)
             for i, p in enumerate(pts)]
    pose = solve_pose_svd(corrs)
    assert np.allclose(pose.rotation, r0, atol=1e-9)
    assert np.allclose(pose.translation, t0, atol=1e-9)


def test_register_self_is_identity():
    cfg = PipelineConfig.from_preset("hdl64")
    scan, _ = generate_scene(SceneSpec(num_poles=15, seed=8), azimuth_samples=540)
    result = register_scans(scan, scan, cfg)
    assert result.success
    assert np.allclose(result.pose.rotation, np.eye(3), atol=1e-6)
    assert np.allclose(result.pose.translation, 0.0, atol=1e-6)
    assert result.rms_residual <= 1e-9
    assert result.num_inliers <= result.num_correspondences


def test_register_transformed_pair():
    cfg = PipelineConfig.from_preset("hdl64")
    scan_a, scan_b, gt = transformed_pair(SceneSpec(num_poles=40, seed=17), 15.0, (2.0, 1.0, 0.0))
    result = register_scans(scan_a, scan_b, cfg)
    assert result.success
    assert rotation_error(result.pose.rotation, gt.rotation) <= 0.1
    assert translation_error(result.pose.translation, gt.translation) <= 0.02


def test_register_flat_ground_fails_cleanly():
    cfg = PipelineConfig.from_preset("hdl64")
    scan_a, _ = generate_scene(SceneSpec(num_poles=0, seed=5), azimuth_samples=540)
    scan_b, _ = generate_scene(SceneSpec(num_poles=0, seed=6), azimuth_samples=540)
    result = register_scans(scan_a, scan_b, cfg)
    assert not result.success
    assert result.pose is None
    assert result.failure_reason
    assert math.isnan(result.rms_residual)


def test_register_centroid_mode():
    cfg = PipelineConfig.from_preset("hdl64").with_overrides(use_centroids=True)
    scan_a, scan_b, gt = transformed_pair(SceneSpec(num_poles=40, seed=18), -10.0, (1.0, 0.5, 0.0))
    result = register_scans(scan_a, scan_b, cfg)
    assert result.success
    assert rotation_error(result.pose.rotation, gt.rotation) <= 0.1
    assert translation_error(result.pose.translation, gt.translation) <= 0.02


def test_register_ransac_mode():
    cfg = PipelineConfig.from_preset("hdl64").with_overrides(use_ransac=True)
    scan_a, scan_b, gt = transformed_pair(SceneSpec(num_poles=40, seed=19), 8.0, (0.5, -1.5, 0.0))
    result = register_scans(scan_a, scan_b, cfg)
    assert result.success
    assert rotation_error(result.pose.rotation, gt.rotation) <= 0.5
    assert translation_error(result.pose.translation, gt.translation) <= 0.05


@pytest.mark.parametrize("alpha", [1.0, 30.0, 90.0, 179.0])
def test_rotation_error_chordal_identity(alpha):
    # || R(a) - I ||_F = sqrt(8) * sin(a / 2), so the metric returns a exactly
    assert rotation_error(rotation_about_z(alpha), np.eye(3)) == pytest.approx(alpha, abs=1e-9)


def test_rotation_error_extremes_and_symmetry():
    assert rotation_error(np.eye(3), np.eye(3)) == 0.0
    assert rotation_error(rotation_about_z(180.0), np.eye(3)) == pytest.approx(180.0, abs=1e-6)
    rng = np.random.default_rng(66)
    for _ in range(10):
        r1, r2 = _random_pose(rng).rotation, _random_pose(rng).rotation
        assert rotation_error(r1, r2) == pytest.approx(rotation_error(r2, r1), abs=1e-12)


def test_trajectory_rmse_identity():
    rng = np.random.default_rng(67)
    poses = [_random_pose(rng) for _ in range(5)]
    assert trajectory_rmse(poses, poses) == 0.0


def test_trajectory_rmse_three_four_five():
    gt = [RigidPose.identity()]
    est = [RigidPose(rotation=np.eye(3), translation=np.array([3.0, 4.0, 0.0]))]
    assert trajectory_rmse(est, gt) == pytest.approx(5.0, abs=1e-12)


def test_trajectory_rmse_matches_direct_oracle():
    rng = np.random.default_rng(68)
    est = [_random_pose(rng) for _ in range(10)]
    gt = [_random_pose(rng) for _ in range(10)]
    assert trajectory_rmse(est, gt) == pytest.approx(
        oracles.trajectory_rmse_direct(est, gt), rel=1e-12)


def test_trajectory_rmse_length_mismatch():
    with pytest.raises(ValueError):
        trajectory_rmse([RigidPose.identity()], [])


def test_pose_file_round_trip(tmp_path):
    rng = np.random.default_rng(69)
    poses = [_random_pose(rng) for _ in range(3)]
    path = tmp_path / "poses.txt"
    write_poses(poses, path)
    back = read_poses(path)
    assert len(back) == 3
    for a, b in zip(poses, back):
        assert np.array_equal(a.rotation, b.rotation)
        assert np.array_equal(a.translation, b.translation)
    line = path.read_text().splitlines()[0]
    assert len(line.split()) == 12


def test_pose_compose_inverse():
    rng = np.random.default_rng(70)
    p = _random_pose(rng)
    q = p.compose(p.inverse())
    assert np.allclose(q.rotation, np.eye(3), atol=1e-12)
    assert np.allclose(q.translation, 0.0, atol=1e-12)
    pts = rng.uniform(-5, 5, (4, 3))
    assert np.allclose(p.inverse().apply(p.apply(pts)), pts, atol=1e-12)
