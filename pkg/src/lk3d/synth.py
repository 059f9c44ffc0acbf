"""Synthetic LiDAR scenes with known ground truth.

Scenes contain vertical poles (the minimal structure the pipeline can
key on) optionally embedded in a planar ground sampled on the sensor's
ring/azimuth grid.  Poles are constructed directly on ring elevations,
span enough scan lines and carry enough points to always form valid
clusters, and are kept away from sector boundaries and the azimuth seam
so that pole count equals cluster count by construction.  Everything is
a pure function of the SceneSpec (seeded RNG).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .registration import RigidPose, rotation_about_z
from .scan_io import HDL64, VLP16, LidarScan, SensorPreset

SENSOR_HEIGHT = 1.7        # meters above ground
POLE_RADIUS = 0.015        # tangential half-extent of pole returns
POLE_RADIAL_STAGGER = 0.03  # radial spread; makes per-ring smoothness ordering structural
POLE_BASE_CLEARANCE = 0.3  # pole base sits this far above the ground plane
POLE_SEPARATION = 2.5      # minimum distance between pole axes
POLE_GROUND_CLEARANCE = 1.2  # m; ground is cleared this far around each pole axis
CLUSTER_MIN_POINTS = 12    # mirrors the extractor defaults
AGGREGATION_SECTORS = 120
GROUND_MAX_RANGE = 420.0   # hard cap on ground-circle radius


@dataclass(frozen=True)
class SceneSpec:
    num_poles: int
    area: float = 30.0                 # half-width of the square region, meters
    rings: int = 64
    points_per_pole_per_ring: int = 2
    ground: bool = True
    noise_sigma: float = 0.0           # meters, isotropic Gaussian
    seed: int = 0

    def __post_init__(self):
        if self.num_poles < 0:
            raise ValueError("num_poles must be >= 0")
        if self.area <= 0:
            raise ValueError("area must be > 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.points_per_pole_per_ring < 1:
            raise ValueError("points_per_pole_per_ring must be >= 1")


def preset_for_rings(rings: int) -> SensorPreset:
    return HDL64 if rings >= 32 else VLP16


def _ring_elevations(preset: SensorPreset) -> np.ndarray:
    """Ring-center elevations in radians, consistent with elevation binning."""
    step = (preset.fov_high - preset.fov_low) / preset.num_rings
    centers = preset.fov_low + (np.arange(preset.num_rings) + 0.5) * step
    return np.radians(centers)


def _snap_off_sector_boundary(azimuth: float) -> float:
    """Remap an azimuth into the central half of its aggregation sector."""
    width = 2.0 * math.pi / AGGREGATION_SECTORS
    base = math.floor(azimuth / width)
    frac = azimuth / width - base
    return (base + 0.25 + 0.5 * frac) * width


def _ground_cap(azimuth_samples: int) -> float:
    """Largest ground-circle radius that stays smooth at this azimuth step.

    The windowed-offset sum of a sampled circle grows with radius times
    the squared angular step; the cap keeps it well below the edge
    threshold (with headroom for position noise).
    """
    step = 2.0 * math.pi / azimuth_samples
    curvature_sum = step * step * 55.0  # sum of k^2 over a 5-each-side window
    return min(GROUND_MAX_RANGE, math.sqrt(3.0) / curvature_sum)


def _pole_min_dist(preset: SensorPreset) -> float:
    # For dense-ring sensors, nearer poles would let occlusion-contaminated
    # ground points on adjacent rings fall within the clustering distance.
    return 8.0 if preset.num_rings >= 32 else 3.0


def _scene_arrays(spec: SceneSpec, azimuth_samples: int):
    """Clean (noise-free) scene geometry: xyz, ring labels, pole truth."""
    preset = preset_for_rings(spec.rings)
    if spec.rings != preset.num_rings:
        preset = SensorPreset("custom", spec.rings, preset.fov_low,
                              preset.fov_high, preset.min_scan_lines)
    elevations = _ring_elevations(preset)
    tan_elev = np.tan(elevations)
    rng = np.random.default_rng(spec.seed)

    span = max(preset.min_scan_lines + 3,
               math.ceil((CLUSTER_MIN_POINTS + 3) / spec.points_per_pole_per_ring))
    base_z = -SENSOR_HEIGHT + POLE_BASE_CLEARANCE
    ground_cap = _ground_cap(azimuth_samples)

    def ground_covered(r: int) -> bool:
        return tan_elev[r] < 0.0 and SENSOR_HEIGHT / -tan_elev[r] <= ground_cap

    # Pole placement: rejection-sample radius/azimuth until every span ring
    # is ground-covered (no truncated windows) and other poles are cleared.
    centers = []
    max_attempts = 500 * max(spec.num_poles, 1)
    attempts = 0
    d_lo = _pole_min_dist(preset)
    d_hi = max(spec.area, d_lo + 2.0)
    while len(centers) < spec.num_poles:
        attempts += 1
        if attempts > max_attempts:
            raise RuntimeError(
                f"could not place {spec.num_poles} poles in area {spec.area}")
        d = rng.uniform(d_lo, d_hi)
        az = _snap_off_sector_boundary(rng.uniform(-math.pi + 0.2, math.pi - 0.2))
        base_ring = int(np.searchsorted(d * tan_elev, base_z, side="left"))
        top_ring = base_ring + span - 1
        if top_ring >= preset.num_rings or not ground_covered(top_ring):
            continue  # too far out: the pole would poke above the ground cover
        x, y = d * math.cos(az), d * math.sin(az)
        if any((x - cx) ** 2 + (y - cy) ** 2 < POLE_SEPARATION ** 2
               for cx, cy, *_ in centers):
            continue
        centers.append((x, y, d, az, base_ring))

    chunks_xyz = []
    chunks_ring = []

    # Ground: one circle per downward ring, sampled on the azimuth grid.
    # A clearance disk around every pole keeps contaminated ground points
    # (high smoothness at the cut borders) too far from any pole axis to
    # ever join a pole cluster.
    if spec.ground:
        az_grid = -math.pi + (np.arange(azimuth_samples) + 0.5) * (2.0 * math.pi / azimuth_samples)
        cos_az, sin_az = np.cos(az_grid), np.sin(az_grid)
        for r in range(preset.num_rings):
            if not ground_covered(r):
                continue
            radius = SENSOR_HEIGHT / -tan_elev[r]
            gx, gy = radius * cos_az, radius * sin_az
            keep = np.ones(azimuth_samples, dtype=bool)
            for cx, cy, d, *_ in centers:
                if abs(radius - d) < POLE_GROUND_CLEARANCE:
                    keep &= (gx - cx) ** 2 + (gy - cy) ** 2 >= POLE_GROUND_CLEARANCE ** 2
            pts = np.stack([gx[keep], gy[keep],
                            np.full(int(keep.sum()), -SENSOR_HEIGHT)], axis=1)
            chunks_xyz.append(pts)
            chunks_ring.append(np.full(pts.shape[0], r, dtype=np.uint16))

    ppr = spec.points_per_pole_per_ring
    tang_off = np.linspace(-POLE_RADIUS, POLE_RADIUS, ppr) if ppr > 1 else np.zeros(1)
    radial_off = np.linspace(0.0, POLE_RADIAL_STAGGER, ppr) if ppr > 1 else np.zeros(1)
    pole_truth = np.zeros((spec.num_poles, 3))
    for p, (x, y, d, az, base_ring) in enumerate(centers):
        tang = np.array([-math.sin(az), math.cos(az)])
        radial = np.array([math.cos(az), math.sin(az)])
        rows = []
        for r in range(base_ring, base_ring + span):
            z = d * tan_elev[r]
            for t_off, r_off in zip(tang_off, radial_off):
                rows.append([x + t_off * tang[0] + r_off * radial[0],
                             y + t_off * tang[1] + r_off * radial[1], z])
        pts = np.asarray(rows)
        chunks_xyz.append(pts)
        chunks_ring.append(np.repeat(np.arange(base_ring, base_ring + span,
                                               dtype=np.uint16), ppr))
        pole_truth[p] = [x, y, pts[:, 2].mean()]

    if chunks_xyz:
        xyz = np.concatenate(chunks_xyz, axis=0)
        ring = np.concatenate(chunks_ring)
    else:
        xyz = np.zeros((0, 3))
        ring = np.zeros(0, dtype=np.uint16)
    return xyz, ring, pole_truth, preset.num_rings


def _noisy_scan(xyz, ring, num_rings, sigma, noise_seed) -> LidarScan:
    if sigma > 0:
        rng = np.random.default_rng(noise_seed)
        xyz = xyz + rng.normal(0.0, sigma, size=xyz.shape)
    return LidarScan.from_points(xyz, np.zeros(xyz.shape[0], dtype=np.float32),
                                 ring, num_rings)


def generate_scene(spec: SceneSpec, azimuth_samples: int = 720):
    """Build a scan plus per-pole ground-truth positions (x, y, mean z)."""
    xyz, ring, poles, num_rings = _scene_arrays(spec, azimuth_samples)
    scan = _noisy_scan(xyz, ring, num_rings, spec.noise_sigma, (spec.seed, 1))
    return scan, poles


def transformed_pair(spec: SceneSpec, yaw_deg: float, translation,
                     azimuth_samples: int = 720):
    """A scene and its rigidly moved copy, independently re-noised.

    Returns (scan_a, scan_b, ground-truth pose) where the pose maps
    scan_a coordinates into scan_b coordinates.
    """
    xyz, ring, _, num_rings = _scene_arrays(spec, azimuth_samples)
    pose = RigidPose(rotation=rotation_about_z(yaw_deg),
                     translation=np.asarray(translation, dtype=np.float64))
    scan_a = _noisy_scan(xyz, ring, num_rings, spec.noise_sigma, (spec.seed, 1))
    scan_b = _noisy_scan(pose.apply(xyz), ring, num_rings, spec.noise_sigma, (spec.seed, 2))
    return scan_a, scan_b, pose
