"""Edge-point extraction and keypoint aggregation.

A point's smoothness is the squared norm of the summed offsets to its
ring neighbors, scaled by the neighborhood size: with P the window of
n/2 predecessors and n/2 successors on the same ring,

    smoothness_i = (1/n) * || sum_{j in P} (p_j - p_i) ||^2

Large values mark depth discontinuities (edges).  Edge points are
bucketed into equal horizontal sectors, greedily clustered inside each
sector, and clusters that are tall (enough distinct rings) and dense
(enough points) emit one aggregation keypoint at their centroid.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .scan_io import LidarScan

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ExtractorParams:
    neighborhood_size: int = 10   # window point count, half on each side
    smooth_threshold: float = 1.0  # m^2, strict lower bound for edge points
    num_sectors: int = 120
    cluster_dist: float = 0.4      # m, horizontal distance to a cluster's running centroid
    min_points: int = 12           # strict: clusters must exceed this
    min_scan_lines: int = 10       # strict; use 4 for 16-ring sensors

    def __post_init__(self):
        if self.neighborhood_size < 2 or self.neighborhood_size % 2:
            raise ValueError("neighborhood_size must be even and >= 2")
        if self.num_sectors < 1:
            raise ValueError("num_sectors must be >= 1")
        if self.cluster_dist <= 0:
            raise ValueError("cluster_dist must be > 0")
        if self.min_points < 1 or self.min_scan_lines < 1:
            raise ValueError("min_points and min_scan_lines must be >= 1")


@dataclass(frozen=True, eq=False)
class EdgePoint:
    position: np.ndarray  # (3,) float64
    smoothness: float
    ring: int
    source_index: int


@dataclass(eq=False)
class EdgePointSet:
    """Edge points in scan order (ring-major, azimuth-minor)."""

    xyz: np.ndarray           # (m, 3) float64
    smoothness: np.ndarray    # (m,) float64
    ring: np.ndarray          # (m,) int32
    source_index: np.ndarray  # (m,) int64

    def __len__(self) -> int:
        return self.xyz.shape[0]

    def __getitem__(self, i: int) -> EdgePoint:
        return EdgePoint(self.xyz[i], float(self.smoothness[i]),
                         int(self.ring[i]), int(self.source_index[i]))

    def take(self, idx: np.ndarray) -> "EdgePointSet":
        return EdgePointSet(self.xyz[idx], self.smoothness[idx],
                            self.ring[idx], self.source_index[idx])


@dataclass(eq=False)
class Cluster:
    """A validated edge-point cluster; members keep scan order."""

    members: EdgePointSet
    centroid: np.ndarray  # (3,) float64, mean of member positions
    distinct_rings: int

    @property
    def num_points(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class AggregationKeypoint:
    centroid: np.ndarray  # (3,) float64
    cluster_id: int       # index into the cluster list


def compute_smoothness(scan: LidarScan, params: ExtractorParams, threads: int = 1) -> np.ndarray:
    """Per-point smoothness values, aligned with the scan's point order.

    Points without a full window (ring ends, short rings) get 0 and can
    never become edge points.
    """
    half = params.neighborhood_size // 2
    n_window = params.neighborhood_size
    out = np.zeros(len(scan), dtype=np.float64)
    slices = scan.ring_slices()

    def fill(sl: slice) -> None:
        pts = scan.xyz[sl].astype(np.float64)
        m = pts.shape[0]
        if m < n_window + 1:
            return
        interior = pts[half:m - half]
        acc = np.zeros_like(interior)
        for off in range(-half, half + 1):
            if off == 0:
                continue
            acc += pts[half + off:m - half + off] - interior
        out[sl][half:m - half] = np.sum(acc * acc, axis=1) / n_window

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, slices))
    else:
        for sl in slices:
            fill(sl)
    return out


def extract_edge_points(scan: LidarScan, params: ExtractorParams,
                        smoothness: np.ndarray | None = None,
                        threads: int = 1) -> EdgePointSet:
    """Points whose smoothness strictly exceeds the threshold."""
    if smoothness is None:
        smoothness = compute_smoothness(scan, params, threads=threads)
    mask = smoothness > params.smooth_threshold
    idx = np.nonzero(mask)[0]
    return EdgePointSet(
        xyz=scan.xyz[idx].astype(np.float64),
        smoothness=smoothness[idx],
        ring=scan.ring[idx].astype(np.int32),
        source_index=idx.astype(np.int64),
    )


def sector_of(x: float, y: float, num_sectors: int) -> int:
    """Horizontal sector index of a point, counterclockwise from +x."""
    if x == 0.0 and y == 0.0:
        raise ValueError("sector undefined for the origin")
    theta = math.atan2(y, x)
    if theta < 0.0:
        theta += TWO_PI
    return min(int(theta / (TWO_PI / num_sectors)), num_sectors - 1)


def _sectors_of(xy: np.ndarray, num_sectors: int) -> np.ndarray:
    theta = np.arctan2(xy[:, 1], xy[:, 0])
    theta = np.where(theta < 0.0, theta + TWO_PI, theta)
    idx = (theta / (TWO_PI / num_sectors)).astype(np.int64)
    return np.minimum(idx, num_sectors - 1)


def aggregate_keypoints(edges: EdgePointSet,
                        params: ExtractorParams) -> tuple[list[Cluster], list[AggregationKeypoint]]:
    """Cluster edge points per sector and emit one keypoint per valid cluster.

    Within a sector, points are visited in ring-then-azimuth order and
    join the first cluster whose running horizontal centroid is within
    ``cluster_dist``.  Only clusters strictly exceeding both the point
    and distinct-ring thresholds survive.  Output order is sector, then
    cluster creation order; deterministic for identical input.
    """
    if len(edges) == 0:
        return [], []
    from ._kernels import greedy_cluster_labels

    sectors = _sectors_of(edges.xyz[:, :2], params.num_sectors)
    order = np.argsort(sectors, kind="stable")  # keeps scan order inside a sector
    sorted_edges = edges.take(order)
    sorted_sectors = sectors[order]

    boundaries = np.nonzero(np.diff(sorted_sectors))[0] + 1
    starts = np.concatenate(([0], boundaries)).astype(np.int64)
    ends = np.concatenate((boundaries, [len(sorted_edges)])).astype(np.int64)

    xy = np.ascontiguousarray(sorted_edges.xyz[:, :2])
    labels, n_clusters = greedy_cluster_labels(xy, starts, ends, params.cluster_dist)

    by_label = np.argsort(labels, kind="stable")  # members stay in scan order
    label_bounds = np.nonzero(np.diff(labels[by_label]))[0] + 1
    seg_starts = np.concatenate(([0], label_bounds))
    seg_ends = np.concatenate((label_bounds, [len(sorted_edges)]))

    clusters: list[Cluster] = []
    keypoints: list[AggregationKeypoint] = []
    for k in range(seg_starts.shape[0]):
        member_idx = by_label[seg_starts[k]:seg_ends[k]]
        if member_idx.shape[0] <= params.min_points:
            continue
        members = sorted_edges.take(member_idx)
        distinct = int(np.unique(members.ring).shape[0])
        if distinct <= params.min_scan_lines:
            continue
        centroid = members.xyz.mean(axis=0)
        clusters.append(Cluster(members=members, centroid=centroid, distinct_rings=distinct))
        keypoints.append(AggregationKeypoint(centroid=centroid, cluster_id=len(clusters) - 1))
    return clusters, keypoints


def write_keypoints(keypoints: list[AggregationKeypoint], clusters: list[Cluster], path) -> None:
    """Text dump: one ``cluster_id x y z num_points num_rings`` line per keypoint."""
    with open(path, "w") as fh:
        for kp in keypoints:
            c = clusters[kp.cluster_id]
            fh.write("%d %.6f %.6f %.6f %d %d\n"
                     % (kp.cluster_id, kp.centroid[0], kp.centroid[1], kp.centroid[2],
                        c.num_points, c.distinct_rings))
