"""Independent brute-force references for verifying the fast paths.

Everything here is written directly against the defining formulas, with
naive enumeration and no reuse of the production helpers (only the data
holders and primitive arithmetic are shared).  Slow on purpose; used by
the test suite on small inputs.
"""

from __future__ import annotations

import math

import numpy as np


def smoothness_direct(scan, n_neighbors: int) -> np.ndarray:
    """Literal windowed-offset sum per point: (1/n) * ||sum (p_j - p_i)||^2."""
    half = n_neighbors // 2
    out = np.zeros(len(scan), dtype=np.float64)
    ring = scan.ring
    xyz = scan.xyz.astype(np.float64)
    start = 0
    while start < len(scan):
        end = start
        while end < len(scan) and ring[end] == ring[start]:
            end += 1
        for i in range(start + half, end - half):
            acc = np.zeros(3)
            for j in range(i - half, i + half + 1):
                if j == i:
                    continue
                acc += xyz[j] - xyz[i]
            out[i] = float(acc @ acc) / n_neighbors
        start = end
    return out


def ring_bins_direct(points, num_rings: int, fov_low: float, fov_high: float) -> np.ndarray:
    """Scalar elevation binning, one point at a time."""
    out = np.zeros(len(points), dtype=np.int64)
    for i, (x, y, z) in enumerate(np.asarray(points, dtype=np.float64)):
        elev = math.degrees(math.atan2(z, math.sqrt(x * x + y * y)))
        idx = math.floor((elev - fov_low) / (fov_high - fov_low) * num_rings)
        out[i] = min(max(idx, 0), num_rings - 1)
    return out


def sector_direct(x: float, y: float, num_sectors: int) -> int:
    """Sector index from the angle in degrees."""
    deg = math.degrees(math.atan2(y, x)) % 360.0
    return min(int(deg // (360.0 / num_sectors)), num_sectors - 1)


def cluster_without_sectors(xy: np.ndarray, max_dist: float) -> list[list[int]]:
    """Single-pass greedy running-centroid clustering over all points at once.

    Same join rule as the production path but with no sector bucketing;
    comparable only on scenes where no cluster straddles a sector edge.
    """
    clusters: list[list[int]] = []
    sums: list[list[float]] = []
    limit = max_dist * max_dist
    for i in range(xy.shape[0]):
        x, y = float(xy[i, 0]), float(xy[i, 1])
        joined = False
        for c, members in enumerate(clusters):
            n = len(members)
            dx = x - sums[c][0] / n
            dy = y - sums[c][1] / n
            if dx * dx + dy * dy <= limit:
                members.append(i)
                sums[c][0] += x
                sums[c][1] += y
                joined = True
                break
        if not joined:
            clusters.append([i])
            sums.append([x, y])
    return clusters


def pair_tables_direct(xy: np.ndarray):
    """Element-wise recomputation of the distance/direction tables."""
    n = xy.shape[0]
    dist = np.zeros((n, n))
    dire = np.zeros((n, n, 2))
    for i in range(n):
        for j in range(n):
            dx = xy[j, 0] - xy[i, 0]
            dy = xy[j, 1] - xy[i, 1]
            dire[i, j, 0] = dx
            dire[i, j, 1] = dy
            dist[i, j] = np.sqrt(dx * dx + dy * dy)
    return dist, dire


def signed_angle_atan2(main, other) -> float:
    """Angle via atan2 of the cross/dot pair, normalized to [0, 2*pi)."""
    cross = main[0] * other[1] - main[1] * other[0]
    dot = main[0] * other[0] + main[1] * other[1]
    return math.atan2(cross, dot) % (2.0 * math.pi)


def _angle_by_branch(mx, my, ox, oy) -> float:
    det = mx * oy - my * ox
    dot = mx * ox + my * oy
    if det == 0.0:
        return 0.0 if dot > 0.0 else math.pi
    c = dot / (np.sqrt(mx * mx + my * my) * np.sqrt(ox * ox + oy * oy))
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    theta = float(np.arccos(c))
    return theta if det > 0.0 else 2.0 * math.pi - theta


def descriptors_direct(xy: np.ndarray, num_anchors: int, num_dims: int = 180) -> np.ndarray:
    """Anchor enumeration plus naive priority merge, recomputing every pair."""
    n = xy.shape[0]
    half_sector = math.pi / num_dims
    width = 2.0 * math.pi / num_dims
    out = np.zeros((n, num_dims))
    for k0 in range(n):
        dists = []
        for j in range(n):
            dx = xy[j, 0] - xy[k0, 0]
            dy = xy[j, 1] - xy[k0, 1]
            dists.append(float(np.sqrt(dx * dx + dy * dy)))
        order = sorted(range(n), key=lambda j: (dists[j], j))
        anchors = [j for j in order if j != k0 and dists[j] > 0.0][:num_anchors]
        candidates = []
        for anchor in anchors:
            values = np.zeros(num_dims)
            filled = np.zeros(num_dims, dtype=bool)
            mx = xy[anchor, 0] - xy[k0, 0]
            my = xy[anchor, 1] - xy[k0, 1]
            for j in range(n):
                if j == k0 or dists[j] == 0.0:
                    continue
                theta = _angle_by_branch(mx, my, xy[j, 0] - xy[k0, 0], xy[j, 1] - xy[k0, 1])
                sector = min(int(((theta + half_sector) % (2.0 * math.pi)) / width),
                             num_dims - 1)
                if not filled[sector] or dists[j] < values[sector]:
                    values[sector] = dists[j]
                    filled[sector] = True
            candidates.append(values)
        for d in range(num_dims):
            for values in candidates:
                if values[d] != 0.0:
                    out[k0, d] = values[d]
                    break
    return out


def match_exhaustive(a_vals: np.ndarray, b_vals: np.ndarray, tol: float,
                     score_threshold: int) -> list[tuple[int, int, int]]:
    """All-pairs scoring with the same selection rules, as (i, j, score)."""
    na, nb = a_vals.shape[0], b_vals.shape[0]
    a_zero = [not np.any(a_vals[i] != 0.0) for i in range(na)]
    b_zero = [not np.any(b_vals[j] != 0.0) for j in range(nb)]
    best: dict[int, tuple[int, int]] = {}
    for i in range(na):
        if a_zero[i]:
            continue
        a = a_vals[i]
        best_j = -1
        best_s = -1
        for j in range(nb):
            if b_zero[j]:
                continue
            b = b_vals[j]
            s = int(np.count_nonzero((a != 0.0) & (b != 0.0) & (np.abs(a - b) < tol)))
            if s > best_s:
                best_s = s
                best_j = j
        if best_j < 0 or best_s < 1:
            continue
        held = best.get(best_j)
        if held is None or best_s > held[1]:
            best[best_j] = (i, best_s)
    out = [(i, j, s) for j, (i, s) in best.items() if s >= score_threshold]
    out.sort()
    return out


def best_per_ring_direct(rings, smoothness) -> dict[int, int]:
    """Per-ring argmax of smoothness, first index winning ties."""
    best: dict[int, int] = {}
    for i in range(len(rings)):
        r = int(rings[i])
        if r not in best or smoothness[i] > smoothness[best[r]]:
            best[r] = i
    return best


def trajectory_rmse_direct(estimated, ground_truth) -> float:
    """Literal evaluation with homogeneous matrices and a generic inverse."""
    total = 0.0
    for est, gt in zip(estimated, ground_truth):
        q = np.eye(4)
        q[:3, :3] = gt.rotation
        q[:3, 3] = gt.translation
        p = np.eye(4)
        p[:3, :3] = est.rotation
        p[:3, 3] = est.translation
        delta = np.linalg.inv(q) @ p
        total += float(np.sum(delta[:3, 3] ** 2))
    return math.sqrt(total / len(estimated))
