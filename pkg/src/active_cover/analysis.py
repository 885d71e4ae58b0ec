"""Sweep aggregation, power-law rate fits and learner comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ConfigError, InsufficientDataError
from .learners import KINDS

Z95 = 1.959963984540054


@dataclass(frozen=True)
class SweepRow:
    n: int
    trials: int
    mean_excess: float
    std_excess: float
    ci95_low: float
    ci95_high: float
    mean_auc: float
    mean_Q: float


@dataclass(frozen=True)
class SweepResult:
    kind: str
    dim: int
    rows: tuple[SweepRow, ...]

    def row(self, n: int) -> SweepRow:
        for r in self.rows:
            if r.n == n:
                return r
        raise ConfigError(f"sweep for {self.kind} has no row at n={n}")

    @property
    def ns(self) -> list[int]:
        return [r.n for r in self.rows]


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    slope_ci95: tuple[float, float]
    dropped: tuple[int, ...] = field(default=())


def fit_power_law(ns, means) -> RateFit:
    """Least-squares line through ``(ln n, ln mean)``.

    Rows with a non-positive mean cannot be logged; they are dropped and
    listed in ``RateFit.dropped``.  The slope interval is the normal 95% band
    from the usual OLS standard error (zero width for three exact points).
    """
    ns = np.asarray(ns, dtype=float)
    means = np.asarray(means, dtype=float)
    if ns.shape != means.shape:
        raise ConfigError("ns and means must have the same length")
    keep = np.isfinite(means) & (means > 0)
    dropped = tuple(int(v) for v in ns[~keep])
    x, y = np.log(ns[keep]), np.log(means[keep])
    if len(np.unique(x)) < 3:
        raise InsufficientDataError(
            f"need at least 3 distinct n with positive mean, got {len(np.unique(x))}"
        )
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    se = math.sqrt(ss_res / (len(x) - 2) / sxx) if len(x) > 2 else math.inf
    return RateFit(slope, intercept, r2, (slope - Z95 * se, slope + Z95 * se), dropped)


def theoretical_exponent(kind: str, dim: int) -> float:
    """Polynomial order of expected excess cost in n, ignoring log factors."""
    if dim < 1:
        raise ConfigError(f"dim must be >= 1, got {dim}")
    if kind == "passive":
        return 1.0
    if kind == "offline":
        return dim / (dim + 1)
    if kind in ("explore-commit", "ucb"):
        return (dim - 1) / dim
    if kind in ("oracle-greedy", "oracle-uniform"):
        return 0.0
    raise ConfigError(f"unknown learner kind {kind!r}; choose from {', '.join(KINDS)}")


def _row(n, results) -> SweepRow:
    excess = np.array([r.excess for r in results], dtype=float)
    k = len(excess)
    mean = float(excess.mean())
    if k >= 2:
        std = float(excess.std(ddof=1))
        half = Z95 * std / math.sqrt(k)
        lo, hi = mean - half, mean + half
    else:
        std, lo, hi = math.nan, math.nan, math.nan
    return SweepRow(
        n=int(n),
        trials=k,
        mean_excess=mean,
        std_excess=std,
        ci95_low=lo,
        ci95_high=hi,
        mean_auc=float(np.mean([r.auc for r in results])),
        mean_Q=float(np.mean([r.Q for r in results])),
    )


def summarize_sweep(results) -> SweepResult:
    """Aggregate the RunResults of one learner kind into per-n rows.

    Accepts a flat iterable of RunResult or a mapping ``{(kind, n): [RunResult]}``.
    The CI is ``mean +/- 1.96 * std / sqrt(trials)`` with the sample std.
    """
    if isinstance(results, dict):
        flat = [r for rs in results.values() for r in rs]
    else:
        flat = list(results)
    if not flat:
        raise InsufficientDataError("no results to summarize")
    kinds = {r.kind for r in flat}
    if len(kinds) != 1:
        raise ConfigError(f"one learner kind per sweep, got {sorted(kinds)}")
    dims = {r.dim for r in flat}
    if len(dims) != 1:
        raise ConfigError(f"inconsistent dimensions in sweep: {sorted(dims)}")
    if len({r.q_opt_kind for r in flat}) != 1:
        raise ConfigError("support-count and lower-bound runs cannot be mixed")
    by_n: dict[int, list] = {}
    for r in flat:
        by_n.setdefault(r.n, []).append(r)
    rows = tuple(_row(n, by_n[n]) for n in sorted(by_n))
    return SweepResult(kind=kinds.pop(), dim=dims.pop(), rows=rows)


@dataclass(frozen=True)
class ComparisonReport:
    at_n: int
    entries: tuple[tuple[str, float, float, float], ...]  # kind, mean, ci_low, ci_high
    pairs: tuple[tuple[str, str, bool], ...]  # lower-mean kind, higher-mean kind, CIs disjoint
    ordering: str

    @property
    def strict(self) -> bool:
        return len(self.entries) > 1 and all(d for _, _, d in self.pairs)

    def precedes(self, a: str, b: str) -> bool:
        """True when ``a`` is strictly below ``b`` with disjoint CIs."""
        for lo, hi, disjoint in self.pairs:
            if (lo, hi) == (a, b):
                return disjoint
        return False

    def to_text(self) -> str:
        lines = [f"comparison at n={self.at_n}"]
        for kind, mean, lo, hi in self.entries:
            lines.append(f"  {kind:15s} mean_excess={mean:.3f} ci95=[{lo:.3f}, {hi:.3f}]")
        for a, b, disjoint in self.pairs:
            rel = "<" if disjoint else "tie"
            lines.append(f"  {a} {rel} {b}")
        lines.append(f"ordering: {self.ordering}")
        return "\n".join(lines) + "\n"


def compare_learners(sweeps, at_n: int) -> ComparisonReport:
    """Mean excess per kind at ``at_n``; ``<`` only between disjoint CIs."""
    entries = []
    for s in sweeps:
        r = s.row(at_n)
        entries.append((s.kind, r.mean_excess, r.ci95_low, r.ci95_high))
    entries.sort(key=lambda e: (e[1], e[0]))
    pairs = []
    for a, b in combinations(entries, 2):
        disjoint = bool(a[3] < b[2])
        pairs.append((a[0], b[0], disjoint))
    parts = [entries[0][0]] if entries else []
    for prev, cur in zip(entries, entries[1:]):
        parts.append("<" if prev[3] < cur[2] else "~")
        parts.append(cur[0])
    return ComparisonReport(at_n, tuple(entries), tuple(pairs), " ".join(parts))
