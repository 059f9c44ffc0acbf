"""Numba kernels for the two hot loops: greedy clustering and match scoring.

Imported lazily by the modules that need them so that CLI startup and
non-hot code paths do not pay the JIT import cost.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def greedy_cluster_labels(xy, segment_starts, segment_ends, max_dist):
    """Greedy running-centroid clustering within pre-sorted segments.

    Points inside each ``[start, end)`` segment are visited in order; a
    point joins the first existing cluster of its segment whose running
    horizontal centroid lies within ``max_dist``, else it opens a new
    cluster.  Cluster ids are global and increase in (segment, creation)
    order.  Returns the per-point label array.
    """
    n = xy.shape[0]
    labels = np.empty(n, dtype=np.int64)
    sum_x = np.empty(n, dtype=np.float64)
    sum_y = np.empty(n, dtype=np.float64)
    counts = np.empty(n, dtype=np.int64)
    limit = max_dist * max_dist
    next_id = 0
    for s in range(segment_starts.shape[0]):
        first = next_id
        for i in range(segment_starts[s], segment_ends[s]):
            x = xy[i, 0]
            y = xy[i, 1]
            assigned = -1
            for c in range(first, next_id):
                cx = sum_x[c] / counts[c]
                cy = sum_y[c] / counts[c]
                dx = x - cx
                dy = y - cy
                if dx * dx + dy * dy <= limit:
                    assigned = c
                    break
            if assigned < 0:
                assigned = next_id
                sum_x[assigned] = 0.0
                sum_y[assigned] = 0.0
                counts[assigned] = 0
                next_id += 1
            labels[i] = assigned
            sum_x[assigned] += x
            sum_y[assigned] += y
            counts[assigned] += 1
    return labels, next_id


@njit(cache=True)
def _bucket_scatter(by_dim, width):
    """Counting-sort the non-zero values of every dimension into buckets.

    ``by_dim`` is (ndims, nb), one row per descriptor dimension.  Values
    land grouped by bucket (order inside a bucket is arbitrary; callers
    verify every candidate exactly).  Returns the flattened values and
    owner ids, per-bucket start offsets, per-dim bucket bases and minima.
    """
    ndims, nb = by_dim.shape
    dim_min = np.zeros(ndims, dtype=np.float64)
    dim_buckets = np.zeros(ndims, dtype=np.int64)
    total_values = 0
    for d in range(ndims):
        vmin = np.inf
        vmax = -np.inf
        for j in range(nb):
            v = by_dim[d, j]
            if v != 0.0:
                total_values += 1
                if v < vmin:
                    vmin = v
                if v > vmax:
                    vmax = v
        if vmax >= vmin:
            dim_min[d] = vmin
            dim_buckets[d] = int((vmax - vmin) / width) + 1

    bucket_base = np.zeros(ndims + 1, dtype=np.int64)
    for d in range(ndims):
        bucket_base[d + 1] = bucket_base[d] + dim_buckets[d] + 1
    starts = np.zeros(bucket_base[ndims] + 1, dtype=np.int64)

    # first pass: bucket occupancy
    for d in range(ndims):
        if dim_buckets[d] == 0:
            continue
        base = bucket_base[d]
        vmin = dim_min[d]
        for j in range(nb):
            v = by_dim[d, j]
            if v != 0.0:
                starts[base + int((v - vmin) / width) + 1] += 1
    for k in range(1, starts.shape[0]):
        starts[k] += starts[k - 1]

    values = np.empty(total_values, dtype=np.float64)
    owners = np.empty(total_values, dtype=np.int32)
    cursor = starts.copy()
    for d in range(ndims):
        if dim_buckets[d] == 0:
            continue
        base = bucket_base[d]
        vmin = dim_min[d]
        for j in range(nb):
            v = by_dim[d, j]
            if v != 0.0:
                pos = cursor[base + int((v - vmin) / width)]
                cursor[base + int((v - vmin) / width)] += 1
                values[pos] = v
                owners[pos] = j
    return values, owners, starts, bucket_base, dim_min, dim_buckets


@njit(cache=True)
def score_and_select(a_vals, b_count, by_dim, tol):
    """Best-scoring B candidate for every row of ``a_vals``.

    A dimension contributes 1 to score(i, j) when both stored values are
    non-zero and differ by strictly less than ``tol``.  Candidate lookup
    walks the bucket ranges covering the tolerance window; every
    candidate is verified with the exact comparison.  Ties go to the
    lower j.
    """
    na, ndims = a_vals.shape
    best_j = np.full(na, -1, dtype=np.int64)
    best_score = np.zeros(na, dtype=np.int64)
    counts = np.zeros(b_count, dtype=np.int32)
    guard = 1e-9  # widen the bucket window, then verify each hit exactly
    width = 0.5 * tol
    values, owners, starts, bucket_base, dim_min, dim_buckets = _bucket_scatter(by_dim, width)
    for i in range(na):
        for d in range(ndims):
            a = a_vals[i, d]
            if a == 0.0:
                continue
            nbuckets = dim_buckets[d]
            if nbuckets == 0:
                continue
            vmin = dim_min[d]
            lower = a - tol - guard
            upper = a + tol + guard
            if upper < vmin:
                continue
            b_lo = int((lower - vmin) / width)
            if b_lo < 0:
                b_lo = 0
            elif b_lo >= nbuckets:
                continue  # the whole window lies above the last value
            b_hi = int((upper - vmin) / width)
            if b_hi >= nbuckets:
                b_hi = nbuckets - 1
            base = bucket_base[d]
            for k in range(starts[base + b_lo], starts[base + b_hi + 1]):
                counts[owners[k]] += abs(a - values[k]) < tol
        bj = -1
        bs = 0
        for j in range(b_count):  # ascending j: first maximum wins ties
            s = counts[j]
            if s > bs:
                bs = int(s)
                bj = j
        counts[:b_count] = 0
        best_j[i] = bj
        best_score[i] = bs
    return best_j, best_score
