"""Latency measurement of the extraction, description and matching stages.

Stages run single-threaded by default so numbers are comparable across
machines; wall-clock, warm-up iteration excluded.  The hard budget for
online use at a 10 Hz scan rate is 100 ms per stage chain.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass

import numpy as np

from . import extraction, matching
from .descriptor import DescriptorParams, generate_descriptors
from .extraction import ExtractorParams
from .matching import MatcherParams
from .registration import rotation_about_z
from .synth import SceneSpec, generate_scene

REALTIME_BUDGET_MS = 100.0


@dataclass(frozen=True)
class StageStats:
    mean_ms: float
    median_ms: float
    p95_ms: float


@dataclass(eq=False)
class LatencyReport:
    stages: dict[str, StageStats]
    points: int
    keypoints: int
    match_set_size: int
    scene_hash: str = ""
    budget_ms: float = REALTIME_BUDGET_MS
    budget_ok: bool = False

    def to_dict(self) -> dict:
        out: dict = {name: {"mean_ms": s.mean_ms, "median_ms": s.median_ms, "p95_ms": s.p95_ms}
                     for name, s in self.stages.items()}
        out["points"] = self.points
        out["keypoints"] = self.keypoints
        out["match_set_size"] = self.match_set_size
        out["scene_hash"] = self.scene_hash
        out["budget_ms"] = self.budget_ms
        out["budget_ok"] = self.budget_ok
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _stats(samples_ms: list[float]) -> StageStats:
    arr = np.asarray(samples_ms)
    return StageStats(mean_ms=float(arr.mean()),
                      median_ms=float(np.median(arr)),
                      p95_ms=float(np.percentile(arr, 95)))


def _bench_scene(scan_size: int, seed: int) -> tuple:
    """A ground+poles scene sized to approximately ``scan_size`` points."""
    spec = SceneSpec(num_poles=40, area=30.0, rings=64, ground=True, seed=seed)
    azimuth_samples = max(360, scan_size // 58)  # ~58 ground-covered rings
    scan, _ = generate_scene(spec, azimuth_samples=azimuth_samples)
    azimuth_samples = max(360, int(azimuth_samples * scan_size / max(len(scan), 1)))
    scan, _ = generate_scene(spec, azimuth_samples=azimuth_samples)
    return scan, spec


def _match_sets(n_keypoints: int, seed: int, params: DescriptorParams):
    """Two descriptor sets of ~n_keypoints from a random keypoint cloud and its moved copy.

    The cloud spans a few hundred meters, like keypoints of an urban
    scan, so descriptor values spread over a realistic range.
    """
    rng = np.random.default_rng(seed)
    xy = rng.uniform(-250.0, 250.0, size=(n_keypoints, 2))
    moved = xy @ rotation_about_z(25.0)[:2, :2].T + np.array([2.0, -1.5])
    set_a = generate_descriptors(xy, params)
    set_b = generate_descriptors(moved, params)
    return set_a, set_b


def run_latency_bench(scan_size: int = 120_000, repetitions: int = 20,
                      match_keypoints: int = 2000, seed: int = 0,
                      threads: int = 1,
                      extractor: ExtractorParams = ExtractorParams(),
                      descriptor: DescriptorParams = DescriptorParams(),
                      matcher: MatcherParams = MatcherParams()) -> LatencyReport:
    if repetitions < 5:
        raise ValueError("repetitions must be >= 5")
    scan, _ = _bench_scene(scan_size, seed)
    set_a, set_b = _match_sets(match_keypoints, seed + 1, descriptor)

    extract_ms: list[float] = []
    describe_ms: list[float] = []
    match_ms: list[float] = []
    keypoint_count = 0
    for rep in range(repetitions + 1):
        t0 = time.perf_counter()
        edges = extraction.extract_edge_points(scan, extractor, threads=threads)
        clusters, keypoints = extraction.aggregate_keypoints(edges, extractor)
        t1 = time.perf_counter()
        descs = generate_descriptors(keypoints, descriptor, threads=threads)
        t2 = time.perf_counter()
        matching.match(set_a, set_b, matcher)
        t3 = time.perf_counter()
        if rep == 0:
            keypoint_count = len(keypoints)
            continue  # warm-up: JIT compilation, cache fills
        extract_ms.append((t1 - t0) * 1e3)
        describe_ms.append((t2 - t1) * 1e3)
        match_ms.append((t3 - t2) * 1e3)

    stages = {
        "extraction": _stats(extract_ms),
        "description": _stats(describe_ms),
        "matching": _stats(match_ms),
    }
    chain_median = stages["extraction"].median_ms + stages["description"].median_ms
    budget_ok = chain_median <= REALTIME_BUDGET_MS and stages["matching"].median_ms <= REALTIME_BUDGET_MS
    digest = hashlib.sha256(scan.xyz.tobytes() + scan.ring.tobytes()).hexdigest()[:16]
    return LatencyReport(stages=stages, points=len(scan), keypoints=keypoint_count,
                         match_set_size=match_keypoints, scene_hash=digest,
                         budget_ok=budget_ok)
