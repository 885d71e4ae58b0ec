"""Sequential query strategies.

Every learner follows the same protocol: ask :meth:`Learner.next_query` for
an index, reveal that point's label through :meth:`Learner.observe`, repeat.
A learner only ever sees the pool coordinates; the two oracle kinds are also
handed the true support flags, and nothing ever hands over labels.

Kinds
-----
passive
    Query a uniformly random permutation of the pool.
offline
    Label a uniform initial sample of ``m`` points, then query the rest in
    ascending distance to the initial positives.  The scorer never changes.
explore-commit
    Same initial sample, then always query the unlabeled point closest to
    any positive found so far.
ucb
    Same initial sample, then query uniformly inside the union of balls of
    radius ``epsilon_radius(sigma, |positives|, D)`` around the positives.
oracle-greedy, oracle-uniform
    Query the true support first (lowest index first, or uniformly at random).

Ties on distance go to the lowest point index.  A commit-phase learner that
has no positive yet queries the remainder of its initial permutation until it
finds one; those steps are flagged as fallback, as is a UCB step taken when
its active set holds no unlabeled point (it then takes one explore-commit
step instead).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError, ConfigError, LearnerStateError, ProtocolError
from .rng import make_rng
from .spatial import DistanceCache

KINDS = ("passive", "offline", "explore-commit", "ucb", "oracle-greedy", "oracle-uniform")
EXPLORE_KINDS = ("offline", "explore-commit", "ucb")
ORACLE_KINDS = ("oracle-greedy", "oracle-uniform")


def epsilon_radius(sigma: float, ell: int, dim: int) -> float:
    """Active-set radius ``sigma * (ln(ell)**2 / ell) ** (1 / dim)``."""
    if ell < 1:
        raise ConfigError(f"ell must be >= 1, got {ell}")
    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    log_ell = math.log(ell)
    return sigma * (log_ell * log_ell / ell) ** (1.0 / dim)


def recommended_m(n: int, dim: int) -> int:
    """Initial sample size ``ceil(n ** (D / (D + 1)))`` clamped to ``[1, n]``.

    Exact integer arithmetic: the result is the least ``m`` with
    ``m ** (D + 1) >= n ** D``.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    target = n**dim
    m = max(1, math.ceil(n ** (dim / (dim + 1))))
    while m > 1 and (m - 1) ** (dim + 1) >= target:
        m -= 1
    while m ** (dim + 1) < target:
        m += 1
    return min(max(m, 1), n)


def default_sigma(n: int, dim: int) -> float:
    """``2 * (ln n) ** (1 / D)``, the CLI's automatic UCB radius scale."""
    return 2.0 * math.log(max(n, 2)) ** (1.0 / dim)


@dataclass(frozen=True)
class LearnerConfig:
    kind: str
    m: int = 1
    sigma: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown learner kind {self.kind!r}; choose from {', '.join(KINDS)}",
                              field="kind")
        if self.kind == "ucb" and (self.sigma is None or not self.sigma > 0):
            raise ConfigError(f"ucb needs sigma > 0, got {self.sigma}", field="sigma")

    def validate(self, n: int) -> None:
        if self.kind in EXPLORE_KINDS and not 1 <= self.m <= n:
            raise ConfigError(f"m={self.m} must lie in [1, n={n}]", field="m")


@dataclass
class LearnerState:
    labeled: np.ndarray
    positives: list[int] = field(default_factory=list)
    min_dist: np.ndarray | None = None
    phase: str = "commit"
    step: int = 0

    @property
    def n_labeled(self) -> int:
        return self.step


@dataclass(frozen=True)
class ActiveSetView:
    radius: float
    members: np.ndarray


class Learner:
    """Base class: bookkeeping shared by every kind."""

    kind = ""
    needs_support = False

    def __init__(self, config: LearnerConfig, points, in_support=None):
        self.config = config
        self.points = np.ascontiguousarray(points, dtype=np.float64)
        if self.points.ndim != 2 or len(self.points) == 0:
            raise ConfigError("points must be a non-empty (n, D) array")
        self.n, self.dim = self.points.shape
        config.validate(self.n)
        if self.needs_support:
            if in_support is None:
                raise CapabilityError(f"{config.kind} needs known support flags")
            self.in_support = np.asarray(in_support, dtype=bool)
        self.rng = make_rng(config.seed)
        self.state = LearnerState(labeled=np.zeros(self.n, dtype=bool))
        self.last_fallback = False
        self._pending: int | None = None

    # protocol -----------------------------------------------------------
    def next_query(self) -> int:
        if self._pending is not None:
            raise ProtocolError(f"index {self._pending} was queried but not observed")
        if self.state.step >= self.n:
            raise LearnerStateError("every point is already labeled")
        self.last_fallback = False
        i = int(self._choose())
        self._pending = i
        return i

    def observe(self, index: int, label: bool) -> None:
        if self._pending is None or index != self._pending:
            raise ProtocolError(f"observed index {index}, but the last query was {self._pending}")
        self._pending = None
        st = self.state
        st.labeled[index] = True
        st.step += 1
        label = bool(label)
        if label:
            st.positives.append(index)
        self._after_observe(index, label)

    @property
    def done(self) -> bool:
        return self.state.step >= self.n

    # hooks --------------------------------------------------------------
    def _choose(self) -> int:
        raise NotImplementedError

    def _after_observe(self, index, label):
        pass


class _OrderedLearner(Learner):
    """Walks a fixed ordering, skipping labeled points."""

    def _order(self) -> np.ndarray:
        raise NotImplementedError

    def __init__(self, config, points, in_support=None):
        super().__init__(config, points, in_support)
        self.order = self._order()
        self._pos = 0

    def _choose(self):
        labeled = self.state.labeled
        while labeled[self.order[self._pos]]:
            self._pos += 1
        return self.order[self._pos]


class PassiveLearner(_OrderedLearner):
    kind = "passive"

    def _order(self):
        return self.rng.permutation(self.n)


class OracleGreedyLearner(_OrderedLearner):
    """In-support points in index order, then everything else in index order."""

    kind = "oracle-greedy"
    needs_support = True

    def _order(self):
        return np.concatenate([np.flatnonzero(self.in_support), np.flatnonzero(~self.in_support)])


class OracleUniformLearner(_OrderedLearner):
    """In-support points in uniformly random order (a uniform draw without
    replacement at every step), then the rest in index order."""

    kind = "oracle-uniform"
    needs_support = True

    def _order(self):
        sup = np.flatnonzero(self.in_support)
        return np.concatenate([self.rng.permutation(sup), np.flatnonzero(~self.in_support)])


class _ExploreLearner(Learner):
    """Initial uniform sample of ``m`` points, then a kind-specific commit policy."""

    def __init__(self, config, points, in_support=None, initial_sample=None):
        super().__init__(config, points, in_support)
        perm = self.rng.permutation(self.n)
        if initial_sample is None:
            self.explore = perm[: config.m]
        else:
            self.explore = np.asarray(initial_sample, dtype=np.int64)
            if len(np.unique(self.explore)) != len(self.explore) or len(self.explore) == 0:
                raise ConfigError("initial sample must be non-empty and without repeats")
            if self.explore.min() < 0 or self.explore.max() >= self.n:
                raise ConfigError("initial sample index out of range")
        # uniform order used while no positive is known after exploring
        self._fallback_order = perm
        self._fallback_pos = 0
        self._explore_pos = 0
        self.cache = DistanceCache(self.points)
        self.state.min_dist = self.cache.min_dist
        self.state.phase = "explore"

    def _choose(self):
        if self._explore_pos < len(self.explore):
            i = self.explore[self._explore_pos]
            self._explore_pos += 1
            return i
        self.state.phase = "commit"
        if not self.state.positives:
            self.last_fallback = True
            labeled = self.state.labeled
            while labeled[self._fallback_order[self._fallback_pos]]:
                self._fallback_pos += 1
            return self._fallback_order[self._fallback_pos]
        return self._commit()

    def _commit(self) -> int:
        raise NotImplementedError

    def _after_observe(self, index, label):
        self.cache.mark_labeled(index)
        if label:
            self._on_positive(index)

    def _on_positive(self, index):
        self.cache.add_positive(index)


class OfflineLearner(_ExploreLearner):
    """Scores every point once, by distance to the positives known when the
    commit phase starts (normally the initial sample's positives)."""

    kind = "offline"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._commit_order = None
        self._commit_pos = 0

    def _on_positive(self, index):
        if self._commit_order is None:
            self.cache.add_positive(index)

    def _commit(self):
        if self._commit_order is None:
            candidates = np.flatnonzero(~self.state.labeled)
            scores = self.cache.min_dist[candidates]
            self._commit_order = candidates[np.argsort(scores, kind="stable")]
        labeled = self.state.labeled
        while labeled[self._commit_order[self._commit_pos]]:
            self._commit_pos += 1
        return self._commit_order[self._commit_pos]


class ExploreCommitLearner(_ExploreLearner):
    kind = "explore-commit"

    def _commit(self):
        return self.cache.argmin_unlabeled()


class UCBLearner(_ExploreLearner):
    kind = "ucb"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._members: np.ndarray | None = None
        self._radius = 0.0
        self.n_fallback = 0

    @property
    def radius(self) -> float:
        ell = len(self.state.positives)
        return epsilon_radius(self.config.sigma, ell, self.dim) if ell else 0.0

    def active_set(self) -> ActiveSetView:
        if self._members is None:
            self._radius = self.radius
            self._members = self.cache.members(self._radius)
        return ActiveSetView(self._radius, self._members)

    def _commit(self):
        members = self.active_set().members
        if members.size == 0:
            self.last_fallback = True
            self.n_fallback += 1
            return self.cache.argmin_unlabeled()
        return members[self.rng.integers(members.size)]

    def _after_observe(self, index, label):
        super()._after_observe(index, label)
        if label:
            self._members = None
        elif self._members is not None:
            pos = np.searchsorted(self._members, index)
            if pos < self._members.size and self._members[pos] == index:
                self._members = np.delete(self._members, pos)


_LEARNERS = {
    cls.kind: cls
    for cls in (PassiveLearner, OfflineLearner, ExploreCommitLearner, UCBLearner,
                OracleGreedyLearner, OracleUniformLearner)
}


def make_learner(config: LearnerConfig, points, in_support=None, initial_sample=None) -> Learner:
    """Instantiate the learner for ``config.kind``.

    ``initial_sample`` pins the explore-phase indices (explore kinds only);
    by default they are the first ``m`` entries of a seeded permutation.
    """
    cls = _LEARNERS[config.kind]
    if initial_sample is not None:
        if config.kind not in EXPLORE_KINDS:
            raise ConfigError(f"{config.kind} has no initial sample")
        return cls(config, points, in_support, initial_sample=initial_sample)
    return cls(config, points, in_support)
