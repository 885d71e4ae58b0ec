"""Nearest-positive distance cache.

Every distance-driven learner needs, for each pool point, the Euclidean
distance to the closest positive labeled so far.  :func:`min_dist_update` is
the plain O(n)-per-positive update.  :class:`DistanceCache` produces exactly
the same numbers but skips whole KD-tree nodes that a new positive cannot
improve: each node stores the largest cached distance among its points, and a
node is visited only if the new positive is closer to its bounding box than
that value.

Distances are computed as ``sqrt(sum_j (p_j - x_j)**2)`` with the sum taken in
axis order, everywhere, so cached values are bit-identical to a brute-force
recomputation.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LEAF_SIZE = 32


def distances_to(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    acc = np.zeros(len(points))
    for j in range(points.shape[1]):
        diff = points[:, j] - x[j]
        acc += diff * diff
    return np.sqrt(acc)


def min_dist_update(min_dist: np.ndarray, points: np.ndarray, new_positive: int) -> np.ndarray:
    """Return ``min(min_dist, dist(points, points[new_positive]))`` elementwise."""
    return np.minimum(min_dist, distances_to(points, points[new_positive]))


def brute_force_min_dist(points: np.ndarray, positives) -> np.ndarray:
    """Distance from every point to its closest positive, from scratch.

    Uses the full ``(k, n)`` pairwise matrix; meant for small pools.
    """
    positives = np.asarray(positives, dtype=np.int64)
    if positives.size == 0:
        return np.full(len(points), np.inf)
    diff = points[None, :, :] - points[positives][:, None, :]
    acc = np.zeros(diff.shape[:2])
    for j in range(points.shape[1]):
        acc += diff[:, :, j] * diff[:, :, j]
    return np.sqrt(acc).min(axis=0)


@njit(cache=True)
def _push_positive(tree_pts, tree_idx, node_lo, node_hi, node_start, node_end,
                   node_max, n_internal, x, min_dist, key, labeled, stack, visited):
    n_dim = tree_pts.shape[1]
    stack[0] = 0
    top = 1
    n_visited = 0
    while top > 0:
        top -= 1
        node = stack[top]
        gap2 = 0.0
        for j in range(n_dim):
            g = 0.0
            if x[j] < node_lo[node, j]:
                g = node_lo[node, j] - x[j]
            elif x[j] > node_hi[node, j]:
                g = x[j] - node_hi[node, j]
            gap2 += g * g
        # rounding is monotone, so no point in the box can come out closer than this
        if np.sqrt(gap2) >= node_max[node]:
            continue
        visited[n_visited] = node
        n_visited += 1
        if node >= n_internal:
            worst = 0.0
            for k in range(node_start[node], node_end[node]):
                acc = 0.0
                for j in range(n_dim):
                    diff = tree_pts[k, j] - x[j]
                    acc += diff * diff
                d = np.sqrt(acc)
                i = tree_idx[k]
                if d < min_dist[i]:
                    min_dist[i] = d
                    if not labeled[i]:
                        key[i] = d
                if min_dist[i] > worst:
                    worst = min_dist[i]
            node_max[node] = worst
        else:
            stack[top] = 2 * node + 1
            stack[top + 1] = 2 * node + 2
            top += 2
    for v in range(n_visited - 1, -1, -1):
        node = visited[v]
        if node < n_internal:
            a = node_max[2 * node + 1]
            b = node_max[2 * node + 2]
            node_max[node] = a if a > b else b


def _build_tree(points: np.ndarray, leaf_size: int):
    n, dim = points.shape
    depth = 0
    while (n >> depth) > leaf_size:
        depth += 1
    n_internal = (1 << depth) - 1
    n_nodes = 2 * n_internal + 1
    order = np.arange(n, dtype=np.int64)
    start = np.zeros(n_nodes, dtype=np.int64)
    end = np.zeros(n_nodes, dtype=np.int64)
    end[0] = n
    for node in range(n_internal):
        s, e = start[node], end[node]
        seg = order[s:e]
        spread = np.ptp(points[seg], axis=0)
        axis = int(np.argmax(spread))
        mid = (e - s) // 2
        part = np.argpartition(points[seg, axis], mid, kind="introselect")
        order[s:e] = seg[part]
        start[2 * node + 1], end[2 * node + 1] = s, s + mid
        start[2 * node + 2], end[2 * node + 2] = s + mid, e
    tree_pts = np.ascontiguousarray(points[order])
    lo = np.empty((n_nodes, dim))
    hi = np.empty((n_nodes, dim))
    for node in range(n_internal, n_nodes):
        seg = tree_pts[start[node]:end[node]]
        lo[node] = seg.min(axis=0)
        hi[node] = seg.max(axis=0)
    for node in range(n_internal - 1, -1, -1):
        lo[node] = np.minimum(lo[2 * node + 1], lo[2 * node + 2])
        hi[node] = np.maximum(hi[2 * node + 1], hi[2 * node + 2])
    return tree_pts, order, lo, hi, start, end, n_internal


class DistanceCache:
    """Incrementally maintained distance from every point to the positive set.

    Also tracks which points are labeled, so that :meth:`argmin_unlabeled`
    and :meth:`members` only see candidates for the next query.
    """

    def __init__(self, points: np.ndarray, leaf_size: int = LEAF_SIZE):
        self.points = np.ascontiguousarray(points, dtype=np.float64)
        n = len(self.points)
        (self._tree_pts, self._tree_idx, self._lo, self._hi,
         self._start, self._end, self._n_internal) = _build_tree(self.points, leaf_size)
        n_nodes = len(self._start)
        self._node_max = np.full(n_nodes, np.inf)
        self._stack = np.empty(n_nodes + 2, dtype=np.int64)
        self._visited = np.empty(n_nodes, dtype=np.int64)
        self.min_dist = np.full(n, np.inf)
        # min_dist for unlabeled points, +inf for labeled ones
        self.key = np.full(n, np.inf)
        self.labeled = np.zeros(n, dtype=np.bool_)
        self.n_sources = 0

    def add_positive(self, index: int) -> None:
        self.add_point(self.points[index])

    def add_point(self, x) -> None:
        x = np.asarray(x, dtype=np.float64)
        _push_positive(self._tree_pts, self._tree_idx, self._lo, self._hi,
                       self._start, self._end, self._node_max, self._n_internal,
                       x, self.min_dist, self.key, self.labeled,
                       self._stack, self._visited)
        self.n_sources += 1

    def mark_labeled(self, index: int) -> None:
        self.labeled[index] = True
        self.key[index] = np.inf

    def argmin_unlabeled(self) -> int:
        """Unlabeled index with the smallest distance (lowest index on ties); -1 if none is finite."""
        i = int(np.argmin(self.key))
        return i if np.isfinite(self.key[i]) else -1

    def members(self, radius: float) -> np.ndarray:
        """Sorted unlabeled indices within ``radius`` of some positive."""
        return np.flatnonzero(self.key <= radius)
