"""Scan ingestion and the uniform in-memory scan representation.

Supported on-disk formats:

* KITTI-style ``.bin``: packed little-endian float32 quadruples
  ``(x, y, z, intensity)``, no header.  Per-point ring indices are
  recovered by elevation binning since the format does not store them.
* ASCII PCD subset: standard ``FIELDS/SIZE/TYPE/COUNT/WIDTH/HEIGHT/
  POINTS/DATA ascii`` header with at least ``x y z`` columns.  An
  optional ``ring`` column is used verbatim when present.
* Internal dump (``.lk3dscan``): magic ``LK3DSCAN``, u32 ring count,
  u64 point count, then packed ``(f32 x, f32 y, f32 z, f32 intensity,
  u16 ring)`` records, little-endian.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Points closer than this to the sensor are self-returns; dropped at ingestion.
MIN_RANGE = 0.5

SCAN_MAGIC = b"LK3DSCAN"

_RECORD_DTYPE = np.dtype(
    [("x", "<f4"), ("y", "<f4"), ("z", "<f4"), ("intensity", "<f4"), ("ring", "<u2")]
)


class FormatError(ValueError):
    """Malformed, truncated, or unsupported input file."""


class EmptyScanError(ValueError):
    """No points survived ingestion filtering."""


@dataclass(frozen=True)
class SensorPreset:
    name: str
    num_rings: int
    fov_low: float   # degrees
    fov_high: float  # degrees
    min_scan_lines: int


HDL64 = SensorPreset("hdl64", 64, -24.8, 2.0, 10)
VLP16 = SensorPreset("vlp16", 16, -15.0, 15.0, 4)

_PRESETS = {p.name: p for p in (HDL64, VLP16)}


def sensor_preset(name: str) -> SensorPreset:
    try:
        return _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown sensor preset {name!r}, expected one of {sorted(_PRESETS)}")


@dataclass(frozen=True, eq=False)
class LidarScan:
    """Immutable point buffer, grouped by ring and azimuth-sorted within each ring.

    Coordinates and intensity are stored as float32 (matching the dump
    format exactly, so write/read round-trips are bit-identical); rings
    are uint16 in ``[0, num_rings)``.
    """

    xyz: np.ndarray        # (n, 3) float32
    intensity: np.ndarray  # (n,) float32, carried but unused by the pipeline
    ring: np.ndarray       # (n,) uint16
    num_rings: int

    def __len__(self) -> int:
        return self.xyz.shape[0]

    @classmethod
    def from_points(cls, xyz, intensity, ring, num_rings: int) -> "LidarScan":
        """Build a scan from raw arrays, sorting by (ring, azimuth)."""
        xyz = np.ascontiguousarray(np.asarray(xyz, dtype=np.float32).reshape(-1, 3))
        n = xyz.shape[0]
        intensity = np.asarray(intensity, dtype=np.float32).reshape(n)
        ring = np.asarray(ring).reshape(n)
        if n and (ring.min() < 0 or ring.max() >= num_rings):
            raise ValueError("ring index out of range")
        ring = ring.astype(np.uint16)
        azimuth = np.arctan2(xyz[:, 1].astype(np.float64), xyz[:, 0].astype(np.float64))
        order = np.lexsort((azimuth, ring))  # stable: ring major, azimuth minor
        return cls(
            xyz=np.ascontiguousarray(xyz[order]),
            intensity=np.ascontiguousarray(intensity[order]),
            ring=np.ascontiguousarray(ring[order]),
            num_rings=int(num_rings),
        )

    def ring_slices(self) -> list[slice]:
        """Per-ring contiguous slices into the point arrays (empty rings allowed)."""
        bounds = np.searchsorted(self.ring, np.arange(self.num_rings + 1))
        return [slice(int(bounds[r]), int(bounds[r + 1])) for r in range(self.num_rings)]

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> "LidarScan":
        """Rigidly transformed copy; ring labels are preserved, azimuth re-sorted."""
        moved = self.xyz.astype(np.float64) @ np.asarray(rotation, dtype=np.float64).T
        moved += np.asarray(translation, dtype=np.float64)
        return LidarScan.from_points(moved, self.intensity, self.ring, self.num_rings)

    def equals(self, other: "LidarScan") -> bool:
        return (
            self.num_rings == other.num_rings
            and np.array_equal(self.xyz, other.xyz)
            and np.array_equal(self.intensity, other.intensity)
            and np.array_equal(self.ring, other.ring)
        )

    def validate(self) -> None:
        """Check structural invariants; raises AssertionError on violation."""
        assert np.all(np.isfinite(self.xyz))
        assert self.ring.max(initial=0) < self.num_rings
        for sl in self.ring_slices():
            az = np.arctan2(self.xyz[sl, 1].astype(np.float64), self.xyz[sl, 0].astype(np.float64))
            assert np.all(np.diff(az) >= 0)


def assign_rings(points, num_rings: int, fov_low: float, fov_high: float) -> np.ndarray:
    """Recover per-point ring indices by uniform elevation binning.

    elevation = atan2(z, sqrt(x^2 + y^2)) in degrees; bins span
    [fov_low, fov_high) uniformly; out-of-FOV points clamp to the
    nearest edge ring.  Deterministic and order-independent.
    """
    if num_rings < 2:
        raise ValueError("num_rings must be >= 2")
    if not fov_low < fov_high:
        raise ValueError("fov_low must be < fov_high")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    horiz = np.sqrt(pts[:, 0] ** 2 + pts[:, 1] ** 2)
    elevation = np.degrees(np.arctan2(pts[:, 2], horiz))
    idx = np.floor((elevation - fov_low) / (fov_high - fov_low) * num_rings)
    return np.clip(idx, 0, num_rings - 1).astype(np.uint16)


def _filter_raw(xyz: np.ndarray, intensity: np.ndarray):
    """Drop non-finite points and points inside the sensor blind zone."""
    finite = np.all(np.isfinite(xyz), axis=1) & np.isfinite(intensity)
    dist = np.sqrt(np.sum(xyz.astype(np.float64) ** 2, axis=1))
    keep = finite & (dist >= MIN_RANGE)
    return xyz[keep], intensity[keep]


def read_kitti_bin(path, preset: SensorPreset = HDL64) -> LidarScan:
    """Read a headerless packed float32 (x, y, z, intensity) scan file."""
    path = Path(path)
    data = path.read_bytes()  # raises FileNotFoundError
    if len(data) % 16 != 0:
        raise FormatError(f"{path}: size {len(data)} is not a multiple of 16 bytes")
    raw = np.frombuffer(data, dtype="<f4").reshape(-1, 4)
    xyz, intensity = _filter_raw(raw[:, :3], raw[:, 3])
    if xyz.shape[0] == 0:
        raise EmptyScanError(f"{path}: no points after filtering")
    ring = assign_rings(xyz, preset.num_rings, preset.fov_low, preset.fov_high)
    return LidarScan.from_points(xyz, intensity, ring, preset.num_rings)


def read_pcd_ascii(path, preset: SensorPreset = HDL64) -> LidarScan:
    """Read an ASCII PCD file with at least x y z fields.

    A ``ring`` column is used verbatim when present; otherwise rings are
    assigned by elevation binning with the preset's FOV.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    fields: list[str] | None = None
    declared_points: int | None = None
    data_start: int | None = None
    for i, line in enumerate(lines):
        token = line.split("#", 1)[0].strip()
        if not token:
            continue
        parts = token.split()
        key = parts[0].upper()
        if key == "FIELDS":
            fields = [p.lower() for p in parts[1:]]
        elif key == "POINTS":
            try:
                declared_points = int(parts[1])
            except (IndexError, ValueError):
                raise FormatError(f"{path}: malformed POINTS line")
        elif key == "DATA":
            if len(parts) < 2 or parts[1].lower() != "ascii":
                raise FormatError(f"{path}: only DATA ascii is supported")
            data_start = i + 1
            break
        elif key in ("VERSION", "SIZE", "TYPE", "COUNT", "WIDTH", "HEIGHT", "VIEWPOINT"):
            continue
        else:
            raise FormatError(f"{path}: unexpected header line {line!r}")
    if fields is None or data_start is None:
        raise FormatError(f"{path}: missing FIELDS or DATA header")
    for required in ("x", "y", "z"):
        if required not in fields:
            raise FormatError(f"{path}: missing required field {required!r}")

    rows = []
    for line in lines[data_start:]:
        if line.strip():
            values = line.split()
            if len(values) != len(fields):
                raise FormatError(f"{path}: row has {len(values)} values, expected {len(fields)}")
            rows.append([float(v) for v in values])
    if declared_points is not None and len(rows) != declared_points:
        raise FormatError(f"{path}: POINTS says {declared_points}, found {len(rows)} rows")
    table = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(fields))

    col = {name: table[:, i] for i, name in enumerate(fields)}
    xyz = np.stack([col["x"], col["y"], col["z"]], axis=1).astype(np.float32)
    intensity = col.get("intensity", np.zeros(len(rows))).astype(np.float32)
    if "ring" in col:
        ring_all = col["ring"]
        finite = np.all(np.isfinite(xyz), axis=1) & np.isfinite(intensity)
        dist = np.sqrt(np.sum(xyz.astype(np.float64) ** 2, axis=1))
        keep = finite & (dist >= MIN_RANGE)
        xyz, intensity, ring = xyz[keep], intensity[keep], ring_all[keep].astype(np.int64)
        num_rings = max(preset.num_rings, int(ring.max()) + 1 if len(ring) else 0)
    else:
        xyz, intensity = _filter_raw(xyz, intensity)
        ring = assign_rings(xyz, preset.num_rings, preset.fov_low, preset.fov_high)
        num_rings = preset.num_rings
    if xyz.shape[0] == 0:
        raise EmptyScanError(f"{path}: no points after filtering")
    return LidarScan.from_points(xyz, intensity, ring, num_rings)


def write_scan(scan: LidarScan, path) -> None:
    """Write the internal binary dump (LK3DSCAN)."""
    records = np.empty(len(scan), dtype=_RECORD_DTYPE)
    records["x"] = scan.xyz[:, 0]
    records["y"] = scan.xyz[:, 1]
    records["z"] = scan.xyz[:, 2]
    records["intensity"] = scan.intensity
    records["ring"] = scan.ring
    with open(path, "wb") as fh:
        fh.write(SCAN_MAGIC)
        fh.write(struct.pack("<IQ", scan.num_rings, len(scan)))
        fh.write(records.tobytes())


def read_scan(path) -> LidarScan:
    """Read the internal binary dump (LK3DSCAN)."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < len(SCAN_MAGIC) + 12 or data[: len(SCAN_MAGIC)] != SCAN_MAGIC:
        raise FormatError(f"{path}: bad magic, not an LK3DSCAN file")
    num_rings, count = struct.unpack_from("<IQ", data, len(SCAN_MAGIC))
    offset = len(SCAN_MAGIC) + 12
    expected = count * _RECORD_DTYPE.itemsize
    if len(data) - offset != expected:
        raise FormatError(f"{path}: expected {expected} payload bytes, got {len(data) - offset}")
    records = np.frombuffer(data, dtype=_RECORD_DTYPE, count=count, offset=offset)
    xyz = np.stack([records["x"], records["y"], records["z"]], axis=1)
    return LidarScan.from_points(xyz, records["intensity"], records["ring"], num_rings)
