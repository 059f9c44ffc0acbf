"""Descriptor matching and expansion to edge-point correspondences.

Two descriptors are similar where both store a non-zero distance and the
values differ by less than the per-dimension tolerance; the similarity
score counts such dimensions.  Matching keeps, per descriptor of set A,
the best-scoring candidate in set B, resolves conflicting claims on the
same B descriptor in favor of the higher score, and drops pairs scoring
below the acceptance threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptor import NUM_DIMS, Descriptor
from .extraction import Cluster


@dataclass(frozen=True)
class MatcherParams:
    dim_tolerance: float = 0.2  # meters, strict per-dimension bound
    score_threshold: int = 3    # minimum accepted score

    def __post_init__(self):
        if self.dim_tolerance <= 0:
            raise ValueError("dim_tolerance must be > 0")
        if self.score_threshold < 1:
            raise ValueError("score_threshold must be >= 1")


@dataclass(frozen=True)
class MatchPair:
    index_a: int
    index_b: int
    score: int


@dataclass(frozen=True, eq=False)
class PointCorrespondence:
    point_a: np.ndarray  # (3,) float64
    point_b: np.ndarray  # (3,) float64
    ring: int
    source_pair: int     # index into the match-pair list


def similarity_score(a: Descriptor, b: Descriptor, params: MatcherParams = MatcherParams()) -> int:
    """Count of dimensions that are non-zero in both and closer than the tolerance."""
    av, bv = a.values, b.values
    if av.shape != bv.shape:
        raise ValueError("descriptor lengths differ")
    both = (av != 0.0) & (bv != 0.0)
    return int(np.count_nonzero(both & (np.abs(av - bv) < params.dim_tolerance)))


def _values_matrix(descriptors) -> np.ndarray:
    out = np.empty((len(descriptors), NUM_DIMS), dtype=np.float64)
    for i, d in enumerate(descriptors):
        out[i] = d.values
    return out


def match(set_a, set_b, params: MatcherParams = MatcherParams()) -> list[MatchPair]:
    """One-to-one descriptor matches, sorted by index into set A.

    All-zero descriptors carry no information and never participate.
    Ties anywhere resolve toward the lower index.
    """
    if len(set_a) == 0 or len(set_b) == 0:
        return []
    from ._kernels import score_and_select

    a_vals = _values_matrix(set_a)
    b_vals = _values_matrix(set_b)
    a_active = np.nonzero(np.any(a_vals != 0.0, axis=1))[0]
    b_active = np.nonzero(np.any(b_vals != 0.0, axis=1))[0]
    if a_active.shape[0] == 0 or b_active.shape[0] == 0:
        return []

    # Bucket index over B, built per dimension inside the kernel.
    nb = b_active.shape[0]
    by_dim = np.ascontiguousarray(b_vals[b_active].T)
    best_j, best_score = score_and_select(
        np.ascontiguousarray(a_vals[a_active]), nb, by_dim, params.dim_tolerance,
    )

    # Resolve multiple claims on the same B descriptor: highest score wins,
    # ties to the lower A index (rows are visited ascending).
    winner: dict[int, tuple[int, int]] = {}
    for row in range(a_active.shape[0]):
        if best_j[row] < 0 or best_score[row] < 1:
            continue
        i = int(a_active[row])
        j = int(b_active[best_j[row]])
        s = int(best_score[row])
        held = winner.get(j)
        if held is None or s > held[1]:
            winner[j] = (i, s)
    pairs = [MatchPair(index_a=i, index_b=j, score=s)
             for j, (i, s) in winner.items() if s >= params.score_threshold]
    pairs.sort(key=lambda p: p.index_a)
    return pairs


def expand_to_edge_matches(pairs: list[MatchPair], clusters_a: list[Cluster],
                           clusters_b: list[Cluster]) -> list[PointCorrespondence]:
    """Edge-point correspondences for every matched cluster pair.

    For each ring present in both clusters, the member with the highest
    smoothness on that ring is selected on either side (ties to the
    lower source index); rings present on one side only emit nothing.
    """
    out: list[PointCorrespondence] = []
    for pair_idx, pair in enumerate(pairs):
        ca = clusters_a[pair.index_a]
        cb = clusters_b[pair.index_b]
        rings_a = _best_member_per_ring(ca)
        rings_b = _best_member_per_ring(cb)
        for ring in sorted(rings_a.keys() & rings_b.keys()):
            ia, ib = rings_a[ring], rings_b[ring]
            out.append(PointCorrespondence(
                point_a=ca.members.xyz[ia],
                point_b=cb.members.xyz[ib],
                ring=ring,
                source_pair=pair_idx,
            ))
    return out


def _best_member_per_ring(cluster: Cluster) -> dict[int, int]:
    """Member index with maximum smoothness per ring (first wins ties)."""
    best: dict[int, int] = {}
    smooth = cluster.members.smoothness
    rings = cluster.members.ring
    for i in range(len(cluster.members)):
        r = int(rings[i])
        held = best.get(r)
        if held is None or smooth[i] > smooth[held]:
            best[r] = i
    return best


def write_matches_csv(pairs: list[MatchPair], path) -> None:
    with open(path, "w") as fh:
        fh.write("index_a,index_b,score\n")
        for p in pairs:
            fh.write(f"{p.index_a},{p.index_b},{p.score}\n")


def write_correspondences_csv(correspondences: list[PointCorrespondence], path) -> None:
    with open(path, "w") as fh:
        fh.write("ax,ay,az,bx,by,bz,ring,pair\n")
        for c in correspondences:
            fh.write("%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%d\n"
                     % (*c.point_a, *c.point_b, c.ring, c.source_pair))
