"""Naive O(n^2) reference versions of the distance-driven learners.

Each step recomputes the distance to every positive from scratch, with no
cache and no tree.  They consume the random stream exactly like the fast
learners (one permutation of the pool at start, then one integer draw per
UCB step) so the two can be compared query by query.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import make_rng
from .spatial import brute_force_min_dist


def reference_episode(kind, points, labels, m, seed, sigma=None, initial_sample=None, budget=None):
    """Run ``kind`` until every positive is labeled (or ``budget`` queries).

    Returns ``(indices, fallback_flags)`` as lists.
    """
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    n, dim = points.shape
    rng = make_rng(seed)
    perm = rng.permutation(n)
    explore = list(perm[:m]) if initial_sample is None else list(initial_sample)
    limit = n if budget is None else min(budget, n)
    n_pos = int(labels.sum())

    labeled = np.zeros(n, dtype=bool)
    positives: list[int] = []
    indices: list[int] = []
    flags: list[bool] = []
    frozen = None

    def done():
        return len(indices) >= limit or (budget is None and len(positives) == n_pos)

    if n_pos == 0 and budget is None:
        return indices, flags

    for i in explore:
        if done():
            break
        indices.append(int(i))
        flags.append(False)
        labeled[i] = True
        if labels[i]:
            positives.append(int(i))

    while not done():
        fallback = False
        unlabeled = np.flatnonzero(~labeled)
        if not positives:
            fallback = True
            i = next(int(j) for j in perm if not labeled[j])
        elif kind == "offline":
            if frozen is None:
                d = brute_force_min_dist(points, positives)[unlabeled]
                # ascending distance, ties by lowest index
                frozen = [int(unlabeled[k]) for k in sorted(range(len(unlabeled)), key=lambda k: (d[k], k))]
            i = next(j for j in frozen if not labeled[j])
        else:
            d = brute_force_min_dist(points, positives)
            du = d[unlabeled]
            if kind == "explore-commit":
                i = int(unlabeled[np.argmin(du)])
            elif kind == "ucb":
                ell = len(positives)
                eps = sigma * (math.log(ell) ** 2 / ell) ** (1.0 / dim)
                members = unlabeled[du <= eps]
                if members.size == 0:
                    fallback = True
                    i = int(unlabeled[np.argmin(du)])
                else:
                    i = int(members[rng.integers(members.size)])
            else:
                raise ValueError(f"no reference for kind {kind!r}")
        indices.append(i)
        flags.append(fallback)
        labeled[i] = True
        if labels[i]:
            positives.append(i)
    return indices, flags
