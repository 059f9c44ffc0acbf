"""Sector-based linear keypoint descriptors.

Each keypoint is described by the horizontal layout of its neighbor
keypoints: the plane around the keypoint is split into 180 sectors of
2 degrees, sector 0 bisected by the direction to the nearest neighbor
(which makes the descriptor invariant to horizontal rotation), and each
slot stores the distance to the closest neighbor inside that sector, or
0 for an empty sector.

To tolerate an unstable nearest neighbor, candidate descriptors are
computed for the k nearest anchors and merged per dimension: the first
non-zero value wins, nearest anchor first.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi
NUM_DIMS = 180
SECTOR_WIDTH = TWO_PI / NUM_DIMS      # 2 degrees
HALF_SECTOR = SECTOR_WIDTH / 2.0      # sector 0 spans [-1, +1) degrees

DESC_MAGIC = b"LK3DDESC"


@dataclass(frozen=True)
class DescriptorParams:
    num_dims: int = NUM_DIMS
    num_anchors: int = 3  # k nearest neighbors anchoring candidate descriptors

    def __post_init__(self):
        if self.num_dims != NUM_DIMS:
            raise ValueError(f"num_dims is fixed at {NUM_DIMS}")
        if not 1 <= self.num_anchors <= 6:
            raise ValueError("num_anchors must be in 1..6")


@dataclass(eq=False)
class PairTables:
    """Precomputed horizontal distances and direction vectors between keypoints."""

    dist: np.ndarray  # (n, n) float64, symmetric, zero diagonal
    dire: np.ndarray  # (n, n, 2) float64, dire[i, j] = xy_j - xy_i


@dataclass(eq=False)
class Descriptor:
    values: np.ndarray  # (180,) float64, >= 0; 0 marks an empty sector
    keypoint_id: int

    def nonzero_dims(self) -> int:
        return int(np.count_nonzero(self.values))


def keypoints_xy(keypoints) -> np.ndarray:
    """Horizontal coordinates of keypoints (objects with .centroid, or an array)."""
    if isinstance(keypoints, np.ndarray):
        return np.ascontiguousarray(keypoints[:, :2], dtype=np.float64)
    return np.array([kp.centroid[:2] for kp in keypoints], dtype=np.float64).reshape(-1, 2)


def build_tables(keypoints) -> PairTables:
    """All pairwise horizontal distances and directions, projected to the plane."""
    xy = keypoints_xy(keypoints)
    dire = xy[None, :, :] - xy[:, None, :]
    dx = dire[:, :, 0]
    dy = dire[:, :, 1]
    dist = np.sqrt(dx * dx + dy * dy)
    return PairTables(dist=dist, dire=dire)


def angle_between(main, other) -> float:
    """Counterclockwise angle from ``main`` to ``other`` in [0, 2*pi).

    The branch is chosen by the sign of the determinant |main; other|;
    collinear vectors resolve to 0 (same direction) or pi (opposite).
    """
    mx, my = float(main[0]), float(main[1])
    ox, oy = float(other[0]), float(other[1])
    if (mx == 0.0 and my == 0.0) or (ox == 0.0 and oy == 0.0):
        raise ValueError("angle undefined for zero vectors")
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
    return theta if det > 0.0 else TWO_PI - theta


def _angles(main: np.ndarray, others: np.ndarray) -> np.ndarray:
    """Vectorized angle_between for one main direction against many vectors."""
    mx, my = main[0], main[1]
    ox = others[:, 0]
    oy = others[:, 1]
    det = mx * oy - my * ox
    dot = mx * ox + my * oy
    c = dot / (np.sqrt(mx * mx + my * my) * np.sqrt(ox * ox + oy * oy))
    c = np.clip(c, -1.0, 1.0)
    theta = np.arccos(c)
    out = np.where(det > 0.0, theta, TWO_PI - theta)
    return np.where(det == 0.0, np.where(dot > 0.0, 0.0, math.pi), out)


def sector_index(theta: float) -> int:
    """Descriptor slot of an angle; slot 0 is bisected by the main direction."""
    return min(int(((theta + HALF_SECTOR) % TWO_PI) / SECTOR_WIDTH), NUM_DIMS - 1)


def _sector_indices(theta: np.ndarray) -> np.ndarray:
    idx = (((theta + HALF_SECTOR) % TWO_PI) / SECTOR_WIDTH).astype(np.int64)
    return np.minimum(idx, NUM_DIMS - 1)


def single_anchor_descriptor(k0: int, anchor: int, tables: PairTables) -> Descriptor:
    """Candidate descriptor of keypoint ``k0`` anchored at one neighbor.

    The main direction points from k0 to the anchor; every other
    keypoint falls into the sector of its angle from the main direction,
    and each sector keeps the minimum distance.  Keypoints coincident
    with k0 carry no direction and are skipped.
    """
    if anchor == k0:
        raise ValueError("anchor must differ from the keypoint itself")
    if tables.dist[k0, anchor] == 0.0:
        raise ValueError("anchor coincides with the keypoint; main direction undefined")
    n = tables.dist.shape[0]
    main = tables.dire[k0, anchor]
    others = np.arange(n)
    keep = (others != k0) & (tables.dist[k0] > 0.0)
    others = others[keep]
    values = np.full(NUM_DIMS, np.inf)
    theta = _angles(main, tables.dire[k0, others])
    sectors = _sector_indices(theta)
    np.minimum.at(values, sectors, tables.dist[k0, others])
    values[~np.isfinite(values)] = 0.0
    return Descriptor(values=values, keypoint_id=k0)


def generate_descriptors(keypoints, params: DescriptorParams = DescriptorParams(),
                         tables: PairTables | None = None,
                         threads: int = 1) -> list[Descriptor]:
    """Descriptor per keypoint, merged over the k nearest anchors.

    Anchors are taken in ascending distance (ties to the lower index);
    the merged value of each dimension is the first non-zero candidate
    value in anchor order.  Isolated keypoints get the all-zero
    descriptor; keypoints with fewer than k usable neighbors use all
    they have.
    """
    if tables is None:
        tables = build_tables(keypoints)
    n = tables.dist.shape[0]

    def build(i: int) -> Descriptor:
        row = tables.dist[i]
        order = np.argsort(row, kind="stable")
        usable = order[(order != i) & (row[order] > 0.0)]
        anchors = [int(j) for j in usable[: params.num_anchors]]
        if not anchors:
            return Descriptor(values=np.zeros(NUM_DIMS), keypoint_id=i)
        merged = single_anchor_descriptor(i, anchors[0], tables).values
        for anchor in anchors[1:]:
            candidate = single_anchor_descriptor(i, anchor, tables).values
            merged = np.where(merged != 0.0, merged, candidate)
        return Descriptor(values=merged, keypoint_id=i)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(build, range(n)))
    return [build(i) for i in range(n)]


def write_descriptors(descriptors: list[Descriptor], path) -> None:
    """Binary dump: magic, u32 count, then per descriptor u32 id + 180 f32."""
    with open(path, "wb") as fh:
        fh.write(DESC_MAGIC)
        fh.write(struct.pack("<I", len(descriptors)))
        for d in descriptors:
            fh.write(struct.pack("<I", d.keypoint_id))
            fh.write(d.values.astype("<f4").tobytes())


def read_descriptors(path) -> list[Descriptor]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[: len(DESC_MAGIC)] != DESC_MAGIC:
        raise ValueError(f"{path}: bad magic, not an LK3DDESC file")
    (count,) = struct.unpack_from("<I", data, len(DESC_MAGIC))
    offset = len(DESC_MAGIC) + 4
    record = 4 + NUM_DIMS * 4
    if len(data) - offset != count * record:
        raise ValueError(f"{path}: truncated descriptor dump")
    out = []
    for _ in range(count):
        (kp_id,) = struct.unpack_from("<I", data, offset)
        values = np.frombuffer(data, dtype="<f4", count=NUM_DIMS, offset=offset + 4)
        out.append(Descriptor(values=values.astype(np.float64), keypoint_id=kp_id))
        offset += record
    return out


def write_descriptors_csv(descriptors: list[Descriptor], path) -> None:
    """CSV emitter: one row per descriptor, keypoint id then 180 columns."""
    with open(path, "w") as fh:
        fh.write("keypoint_id," + ",".join(f"d{i}" for i in range(NUM_DIMS)) + "\n")
        for d in descriptors:
            fh.write(str(d.keypoint_id) + "," + ",".join(repr(float(v)) for v in d.values) + "\n")
