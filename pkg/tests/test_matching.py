import math

import numpy as np
import pytest

from lk3d import oracles
from lk3d.descriptor import Descriptor, generate_descriptors
from lk3d.extraction import Cluster, EdgePointSet
from lk3d.matching import (MatcherParams, MatchPair, expand_to_edge_matches, match,
                           similarity_score, write_correspondences_csv,
                           write_matches_csv)

PARAMS = MatcherParams()


def _desc(values, kp_id=0):
    full = np.zeros(180)
    for d, v in values.items():
        full[d] = v
    return Descriptor(values=full, keypoint_id=kp_id)


def test_similarity_identical():
    a = _desc({3: 1.0, 10: 2.0, 20: 3.0, 40: 4.0, 90: 5.0, 120: 6.0, 170: 7.0})
    assert similarity_score(a, a, PARAMS) == 7


def test_similarity_tolerance_strict():
    a = _desc({0: 5.0})
    b = _desc({0: 5.25})
    assert similarity_score(a, b, PARAMS) == 0  # 0.25 >= 0.2
    c = _desc({0: 5.19})
    assert similarity_score(a, c, PARAMS) == 1


def test_similarity_zero_dims_skipped():
    a = _desc({1: 2.0, 2: 3.0, 3: 4.0})
    b = _desc({4: 2.0, 5: 3.0, 6: 4.0})
    assert similarity_score(a, b, PARAMS) == 0


def test_similarity_symmetric():
    rng = np.random.default_rng(51)
    for _ in range(50):
        a = Descriptor(values=np.where(rng.random(180) < 0.2, rng.uniform(0, 10, 180), 0.0),
                       keypoint_id=0)
        b = Descriptor(values=np.where(rng.random(180) < 0.2, rng.uniform(0, 10, 180), 0.0),
                       keypoint_id=1)
        assert similarity_score(a, b, PARAMS) == similarity_score(b, a, PARAMS)


def test_match_self_single():
    d = _desc({5: 1.0, 9: 2.0, 33: 3.0, 77: 4.0})
    pairs = match([d], [d], PARAMS)
    assert pairs == [MatchPair(index_a=0, index_b=0, score=4)]


def test_match_conflict_resolution():
    target = _desc({0: 1.0, 1: 2.0, 2: 3.0, 3: 4.0, 4: 5.0})
    strong = _desc({0: 1.0, 1: 2.0, 2: 3.0, 3: 4.0, 4: 5.0})          # score 5
    weak = _desc({0: 1.0, 1: 2.0, 2: 3.0, 90: 8.0, 91: 9.0})          # score 3
    pairs = match([strong, weak], [target], PARAMS)
    assert pairs == [MatchPair(index_a=0, index_b=0, score=5)]


def test_match_all_zero_descriptors_excluded():
    zero = Descriptor(values=np.zeros(180), keypoint_id=0)
    live = _desc({1: 1.0, 2: 2.0, 3: 3.0})
    assert match([zero], [zero], PARAMS) == []
    assert match([zero, live], [live, zero], PARAMS) == [MatchPair(0 + 1, 0, 3)]


def test_match_empty_inputs():
    assert match([], [], PARAMS) == []


def test_match_matches_exhaustive_oracle():
    rng = np.random.default_rng(52)
    for _ in range(40):
        na, nb = int(rng.integers(1, 41)), int(rng.integers(1, 41))

        def mk(n):
            out = []
            for i in range(n):
                v = np.zeros(180)
                k = int(rng.integers(0, 20))
                dims = rng.choice(180, size=k, replace=False)
                v[dims] = rng.uniform(0.05, 20.0, k)
                out.append(Descriptor(values=v, keypoint_id=i))
            return out

        set_a, set_b = mk(na), mk(nb)
        got = [(p.index_a, p.index_b, p.score) for p in match(set_a, set_b, PARAMS)]
        want = oracles.match_exhaustive(
            np.stack([d.values for d in set_a]),
            np.stack([d.values for d in set_b]),
            PARAMS.dim_tolerance, PARAMS.score_threshold)
        assert got == want


def test_match_one_to_one_and_threshold():
    rng = np.random.default_rng(53)
    xy_a = rng.uniform(-40, 40, (30, 2))
    xy_b = rng.uniform(-40, 40, (30, 2))
    pairs = match(generate_descriptors(xy_a), generate_descriptors(xy_b), PARAMS)
    assert len({p.index_a for p in pairs}) == len(pairs)
    assert len({p.index_b for p in pairs}) == len(pairs)
    assert all(p.score >= PARAMS.score_threshold for p in pairs)
    assert [p.index_a for p in pairs] == sorted(p.index_a for p in pairs)


def test_match_self_identity_pairing():
    rng = np.random.default_rng(54)
    descs = generate_descriptors(rng.uniform(-50, 50, (25, 2)))
    pairs = match(descs, descs, PARAMS)
    assert [(p.index_a, p.index_b) for p in pairs] == [(i, i) for i in range(25)]


def test_match_recovers_rigid_motion_correspondence():
    rng = np.random.default_rng(55)
    recovered = []
    for _ in range(10):
        n = int(rng.integers(20, 60))
        xy = rng.uniform(-60, 60, (n, 2))
        ang = rng.uniform(0, 2 * math.pi)
        rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
        moved = xy @ rot.T + rng.uniform(-10, 10, 2)
        pairs = match(generate_descriptors(xy), generate_descriptors(moved), PARAMS)
        good = sum(p.index_a == p.index_b for p in pairs)
        recovered.append(good / n)
    assert min(recovered) >= 0.95


def _cluster(rows):
    """rows: (x, y, z, smoothness, ring, source_index)"""
    arr = np.asarray(rows, dtype=np.float64)
    members = EdgePointSet(xyz=arr[:, :3], smoothness=arr[:, 3],
                           ring=arr[:, 4].astype(np.int32),
                           source_index=arr[:, 5].astype(np.int64))
    return Cluster(members=members, centroid=arr[:, :3].mean(axis=0),
                   distinct_rings=len(set(arr[:, 4].tolist())))


def test_expand_shared_rings():
    ca = _cluster([(1, 1, 0.0, 2.0, 3, 0), (1, 1, 0.1, 2.0, 4, 1), (1, 1, 0.2, 2.0, 5, 2)])
    cb = _cluster([(2, 2, 0.0, 2.0, 3, 0), (2, 2, 0.1, 2.0, 4, 1), (2, 2, 0.2, 2.0, 5, 2)])
    corrs = expand_to_edge_matches([MatchPair(0, 0, 5)], [ca], [cb])
    assert len(corrs) == 3
    assert [c.ring for c in corrs] == [3, 4, 5]
    assert all(c.source_pair == 0 for c in corrs)


def test_expand_disjoint_rings():
    ca = _cluster([(1, 1, 0.0, 2.0, 3, 0)])
    cb = _cluster([(2, 2, 0.0, 2.0, 9, 0)])
    assert expand_to_edge_matches([MatchPair(0, 0, 5)], [ca], [cb]) == []


def test_expand_selects_max_smoothness():
    ca = _cluster([(1, 1, 0.0, 1.5, 7, 0), (1, 1, 0.1, 2.5, 7, 1), (1, 1, 0.2, 2.0, 7, 2)])
    cb = _cluster([(2, 2, 0.0, 9.0, 7, 5)])
    corrs = expand_to_edge_matches([MatchPair(0, 0, 5)], [ca], [cb])
    assert len(corrs) == 1
    assert corrs[0].point_a[2] == pytest.approx(0.1)  # the 2.5-smoothness member
    want = oracles.best_per_ring_direct(ca.members.ring, ca.members.smoothness)
    assert want[7] == 1


def test_expand_tie_breaks_to_first_member():
    ca = _cluster([(1, 1, 0.0, 2.5, 7, 0), (1, 1, 0.1, 2.5, 7, 1)])
    cb = _cluster([(2, 2, 0.0, 2.5, 7, 0)])
    corrs = expand_to_edge_matches([MatchPair(0, 0, 5)], [ca], [cb])
    assert corrs[0].point_a[2] == 0.0  # lower source index wins the tie


def test_csv_writers(tmp_path):
    pairs = [MatchPair(0, 2, 7), MatchPair(1, 0, 4)]
    write_matches_csv(pairs, tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "index_a,index_b,score"
    assert lines[1] == "0,2,7"

    ca = _cluster([(1, 1, 0.0, 2.0, 3, 0)])
    cb = _cluster([(2, 2, 0.5, 2.0, 3, 0)])
    corrs = expand_to_edge_matches([MatchPair(0, 0, 5)], [ca], [cb])
    write_correspondences_csv(corrs, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "ax,ay,az,bx,by,bz,ring,pair"
    assert lines[1].split(",")[6] == "3"


def test_params_validation():
    with pytest.raises(ValueError):
        MatcherParams(dim_tolerance=0.0)
    with pytest.raises(ValueError):
        MatcherParams(score_threshold=0)
