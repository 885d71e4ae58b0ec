"""Episodes, cost accounting and retrieval metrics.

The harness owns the ground truth.  It asks the learner for an index, reveals
that one label, and stops as soon as its stop rule fires; the learner never
learns how many positives exist.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .distributions import Dataset, DistributionSpec, sample_dataset
from .errors import ConfigError
from .learners import LearnerConfig, make_learner
from .rng import trial_seeds

DEFAULT_CHECKPOINTS = 20


@dataclass(frozen=True)
class StopRule:
    mode: str = "all"
    budget: int | None = None

    def __post_init__(self):
        if self.mode not in ("all", "budget"):
            raise ConfigError(f"unknown stop mode {self.mode!r}", field="stop")
        if self.mode == "budget" and (self.budget is None or self.budget < 1):
            raise ConfigError(f"budget must be >= 1, got {self.budget}", field="stop")

    @classmethod
    def parse(cls, text: str) -> StopRule:
        """``"all"`` or ``"budget:K"``."""
        text = str(text).strip()
        if text in ("all", "all-positives-found"):
            return cls("all")
        if text.startswith("budget:"):
            try:
                return cls("budget", int(text.split(":", 1)[1]))
            except ValueError:
                pass
        raise ConfigError(f"expected 'all' or 'budget:K', got {text!r}", field="stop")

    def __str__(self):
        return "all" if self.mode == "all" else f"budget:{self.budget}"


@dataclass(frozen=True)
class QueryLog:
    indices: np.ndarray
    labels: np.ndarray
    fallback: np.ndarray

    @property
    def Q(self) -> int:
        return len(self.indices)

    @property
    def steps(self) -> np.ndarray:
        return np.arange(1, self.Q + 1)

    @property
    def cum_positives(self) -> np.ndarray:
        return np.cumsum(self.labels, dtype=np.int64)

    def to_csv(self) -> str:
        lines = ["step,index,label,fallback"]
        for s, i, y, f in zip(range(1, self.Q + 1), self.indices.tolist(),
                              self.labels.tolist(), self.fallback.tolist()):
            lines.append(f"{s},{i},{int(y)},{int(f)}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RunResult:
    Q: int
    Q_opt: int
    excess: int
    n_pos: int
    recall_curve: tuple[float, ...]
    auc: float
    q_opt_kind: str
    kind: str = ""
    n: int = 0
    dim: int = 0
    trial: int = -1
    seed: int | None = None
    n_fallback: int = 0


def run_episode(dataset: Dataset, config: LearnerConfig, stop: StopRule = StopRule(),
                initial_sample=None) -> QueryLog:
    """Run one learner on ``dataset`` until ``stop`` fires."""
    learner = make_learner(
        config,
        dataset.points,
        in_support=dataset.in_support if config.kind.startswith("oracle") else None,
        initial_sample=initial_sample,
    )
    n = dataset.n
    labels = dataset.labels
    n_pos = dataset.n_pos
    if stop.mode == "all":
        limit = n if n_pos > 0 else 0
    else:
        limit = min(stop.budget, n)
    indices = np.empty(limit, dtype=np.int64)
    revealed = np.empty(limit, dtype=bool)
    fallback = np.empty(limit, dtype=bool)
    found = 0
    q = 0
    while q < limit:
        i = learner.next_query()
        y = bool(labels[i])
        learner.observe(i, y)
        indices[q] = i
        revealed[q] = y
        fallback[q] = learner.last_fallback
        q += 1
        found += y
        if stop.mode == "all" and found == n_pos:
            break
    return QueryLog(indices[:q], revealed[:q], fallback[:q])


def q_opt(dataset: Dataset) -> tuple[int, str]:
    """Queries spent by the learner that knows the positive support."""
    if dataset.in_support is not None:
        return int(dataset.in_support.sum()), "support-count"
    return dataset.n_pos, "positive-count-lower-bound"


def recall_curve(log: QueryLog, n: int, n_pos: int, checkpoints: int = DEFAULT_CHECKPOINTS):
    """Fraction of all positives found within the first ``ceil(k n / B)`` queries, k = 1..B."""
    if checkpoints < 1:
        raise ConfigError(f"checkpoints must be >= 1, got {checkpoints}", field="checkpoints")
    if n_pos == 0:
        return np.ones(checkpoints)
    cum = log.cum_positives
    out = np.empty(checkpoints)
    for k in range(1, checkpoints + 1):
        budget = -(-k * n // checkpoints)
        t = min(budget, log.Q)
        out[k - 1] = (cum[t - 1] if t > 0 else 0) / n_pos
    return out


def score_run(log: QueryLog, dataset: Dataset, checkpoints: int = DEFAULT_CHECKPOINTS,
              **meta) -> RunResult:
    opt, opt_kind = q_opt(dataset)
    curve = recall_curve(log, dataset.n, dataset.n_pos, checkpoints)
    return RunResult(
        Q=log.Q,
        Q_opt=opt,
        excess=log.Q - opt,
        n_pos=dataset.n_pos,
        recall_curve=tuple(float(v) for v in curve),
        auc=float(curve.mean()),
        q_opt_kind=opt_kind,
        n=dataset.n,
        dim=dataset.dim,
        n_fallback=int(log.fallback.sum()),
        **meta,
    )


def run_cell(spec: DistributionSpec, n: int, configs, stop: StopRule, trial: int,
             base_seed: int, checkpoints: int = DEFAULT_CHECKPOINTS) -> list[RunResult]:
    """One trial: sample the pool once and run every config on it.

    Each config's learner seed is replaced by the trial's derived seed, so a
    result depends only on ``(spec, n, config, stop, base_seed, trial)``.
    """
    data_seed, learner_seed = trial_seeds(base_seed, trial)
    dataset = sample_dataset(spec, n, data_seed)
    out = []
    for cfg in configs:
        cfg = replace(cfg, seed=learner_seed)
        log = run_episode(dataset, cfg, stop)
        out.append(score_run(log, dataset, checkpoints, kind=cfg.kind, trial=trial, seed=data_seed))
    return out


def _run_cell_star(args):
    return run_cell(*args)


def map_cells(tasks, threads: int = 1):
    """Evaluate ``run_cell`` argument tuples, in order, optionally in worker processes."""
    tasks = list(tasks)
    if threads is None or threads <= 1 or len(tasks) <= 1:
        return [run_cell(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(threads, len(tasks))) as pool:
        return list(pool.map(_run_cell_star, tasks, chunksize=1))


def run_trials(spec: DistributionSpec, n: int, config: LearnerConfig, stop: StopRule,
               trials: int, base_seed: int, checkpoints: int = DEFAULT_CHECKPOINTS,
               threads: int = 1) -> list[RunResult]:
    """Independent trials, ordered by trial index.

    Trial ``i`` draws its pool with seed ``mix64(base_seed, i)`` and seeds the
    learner with ``mix64(mix64(base_seed, i), 0)``.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}", field="trials")
    tasks = [(spec, n, [config], stop, t, base_seed, checkpoints) for t in range(trials)]
    return [cell[0] for cell in map_cells(tasks, threads)]


def default_threads() -> int:
    env = os.environ.get("ACTIVE_COVER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"ACTIVE_COVER_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1

