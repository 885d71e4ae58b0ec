"""Experiment configuration, orchestration and CSV output.

Configuration is a JSON object; every key is optional::

    {
      "preset": "cube-overlap",     # or "distribution": {inline spec}
      "dim": 2,
      "p": 0.3,
      "n": [4000, 8000],            # int or list of ints
      "learners": [                 # kind plus optional m / sigma rule
        {"kind": "passive"},
        {"kind": "offline", "m": "recommended"},
        {"kind": "ucb", "m": 100, "sigma": "auto"}
      ],
      "trials": 20,
      "seed": 0,
      "stop": "all",                # or "budget:K"
      "checkpoints": 20,
      "data": null,                 # CSV pool to use instead of sampling
      "out": "results",
      "threads": null,              # default: ACTIVE_COVER_THREADS, then CPU count
      "emit_query_logs": false
    }

Defaults: ``m`` is ``"recommended"`` (ceil(n^(D/(D+1)))) for offline and 100
for explore-commit and ucb; ``sigma`` is ``"auto"``, i.e. 2 * (ln n)^(1/D).
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import __version__
from .analysis import (
    compare_learners,
    fit_power_law,
    summarize_sweep,
    theoretical_exponent,
)
from .distributions import PRESETS, DistributionSpec, load_dataset, make_preset
from .errors import ConfigError, InsufficientDataError
from .learners import EXPLORE_KINDS, KINDS, LearnerConfig, default_sigma, recommended_m
from .simulation import (
    DEFAULT_CHECKPOINTS,
    StopRule,
    default_threads,
    map_cells,
    run_episode,
    score_run,
)
from .rng import trial_seeds

SWEEP_COLUMNS = ["kind", "D", "n", "trials", "mean_excess", "std_excess",
                 "ci_low", "ci_high", "mean_auc", "mean_Q"]
RATE_COLUMNS = ["kind", "D", "slope", "slope_ci_low", "slope_ci_high",
                "intercept", "r_squared", "theoretical_exponent"]
DEFAULT_FIXED_M = 100


@dataclass(frozen=True)
class LearnerSpec:
    """A learner kind plus the rules that turn n into concrete m and sigma."""

    kind: str
    m: int | str = "default"
    sigma: float | str = "auto"

    def resolve(self, n: int, dim: int, where: str = "learners") -> LearnerConfig:
        m_rule = self.m
        if m_rule == "default":
            m_rule = "recommended" if self.kind == "offline" else DEFAULT_FIXED_M
        m = recommended_m(n, dim) if m_rule == "recommended" else int(m_rule)
        if self.kind in EXPLORE_KINDS and not 1 <= m <= n:
            raise ConfigError(f"m={m} must lie in [1, n={n}]", field=f"{where}.m")
        sigma = None
        if self.kind == "ucb":
            sigma = default_sigma(n, dim) if self.sigma == "auto" else float(self.sigma)
        return LearnerConfig(self.kind, m=m if self.kind in EXPLORE_KINDS else 1, sigma=sigma)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind in EXPLORE_KINDS:
            d["m"] = self.m
        if self.kind == "ucb":
            d["sigma"] = self.sigma
        return d


def _parse_m(value, where):
    if value in ("recommended", "default"):
        return value
    try:
        m = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected an integer or 'recommended', got {value!r}", field=where) from None
    if isinstance(value, float) and value != m:
        raise ConfigError(f"expected an integer, got {value!r}", field=where)
    if m < 1:
        raise ConfigError(f"m must be >= 1, got {m}", field=where)
    return m


def _parse_sigma(value, where):
    if value == "auto":
        return value
    try:
        s = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number or 'auto', got {value!r}", field=where) from None
    if not s > 0:
        raise ConfigError(f"sigma must be positive, got {s}", field=where)
    return s


def _parse_learner(entry, where) -> LearnerSpec:
    if isinstance(entry, str):
        entry = {"kind": entry}
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ConfigError("expected an object with a 'kind' key", field=where)
    unknown = set(entry) - {"kind", "m", "sigma"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", field=where)
    kind = entry["kind"]
    if kind not in KINDS:
        raise ConfigError(f"unknown learner kind {kind!r}; choose from {', '.join(KINDS)}",
                          field=f"{where}.kind")
    return LearnerSpec(
        kind,
        _parse_m(entry.get("m", "default"), f"{where}.m"),
        _parse_sigma(entry.get("sigma", "auto"), f"{where}.sigma"),
    )


def _positive_int(value, where, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"expected an integer >= {minimum}, got {value!r}", field=where)
    return value


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str | None = "cube-overlap"
    distribution: DistributionSpec | None = None
    dim: int = 2
    p: float = 0.3
    n: tuple[int, ...] = (1000,)
    learners: tuple[LearnerSpec, ...] = (LearnerSpec("explore-commit"),)
    trials: int = 20
    seed: int = 0
    stop: StopRule = field(default_factory=StopRule)
    checkpoints: int = DEFAULT_CHECKPOINTS
    data: str | None = None
    out: str = "results"
    threads: int | None = None
    emit_query_logs: bool = False

    @property
    def spec(self) -> DistributionSpec:
        if self.distribution is not None:
            return self.distribution
        return make_preset(self.preset, self.dim, self.p)

    @property
    def effective_dim(self) -> int:
        return self.distribution.dim if self.distribution is not None else self.dim

    def identity(self) -> dict:
        """Every field that affects results (not output location or parallelism)."""
        d = {
            "dim": self.effective_dim,
            "n": list(self.n),
            "learners": [l.to_dict() for l in self.learners],
            "trials": self.trials,
            "seed": self.seed,
            "stop": str(self.stop),
            "checkpoints": self.checkpoints,
        }
        if self.data is not None:
            d["data"] = hashlib.sha256(Path(self.data).read_bytes()).hexdigest()
        elif self.distribution is not None:
            d["distribution"] = self.distribution.to_dict()
        else:
            d.update(preset=self.preset, p=self.p)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def header_comment(self) -> str:
        return (f"# active-cover version={__version__} config_hash={self.config_hash()} "
                f"base_seed={self.seed} stop={self.stop} checkpoints={self.checkpoints} "
                f"checkpoint_convention=whole-pool")


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be a JSON object")
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    kw = {}
    if "distribution" in raw and raw["distribution"] is not None:
        kw["distribution"] = DistributionSpec.from_dict(raw["distribution"])
        kw["preset"] = None
        for key in ("dim", "p"):
            if key in raw and raw[key] != kw["distribution"].to_dict()[key]:
                raise ConfigError("conflicts with the inline distribution", field=key)
    if "preset" in raw and raw["preset"] is not None:
        if "distribution" in kw:
            raise ConfigError("give either preset or distribution, not both", field="preset")
        if raw["preset"] not in PRESETS:
            raise ConfigError(f"unknown preset {raw['preset']!r}", field="preset")
        kw["preset"] = raw["preset"]
    if "dim" in raw:
        kw["dim"] = _positive_int(raw["dim"], "dim")
    if "p" in raw:
        p = raw["p"]
        if isinstance(p, bool) or not isinstance(p, (int, float)) or not 0 < p < 1:
            raise ConfigError(f"expected a probability in (0, 1), got {p!r}", field="p")
        kw["p"] = float(p)
    if "n" in raw:
        ns = raw["n"] if isinstance(raw["n"], list) else [raw["n"]]
        if not ns:
            raise ConfigError("at least one n is required", field="n")
        kw["n"] = tuple(sorted({_positive_int(v, f"n[{i}]") for i, v in enumerate(ns)}))
    if "learners" in raw:
        entries = raw["learners"]
        if not isinstance(entries, list) or not entries:
            raise ConfigError("expected a non-empty list", field="learners")
        kw["learners"] = tuple(_parse_learner(e, f"learners[{i}]") for i, e in enumerate(entries))
    if "trials" in raw:
        kw["trials"] = _positive_int(raw["trials"], "trials")
    if "seed" in raw:
        kw["seed"] = _positive_int(raw["seed"], "seed", minimum=0)
    if "stop" in raw:
        kw["stop"] = StopRule.parse(raw["stop"])
    if "checkpoints" in raw:
        kw["checkpoints"] = _positive_int(raw["checkpoints"], "checkpoints")
    if raw.get("data") is not None:
        kw["data"] = str(raw["data"])
    if "out" in raw:
        kw["out"] = str(raw["out"])
    if raw.get("threads") is not None:
        kw["threads"] = _positive_int(raw["threads"], "threads")
    if "emit_query_logs" in raw:
        kw["emit_query_logs"] = bool(raw["emit_query_logs"])
    return ExperimentConfig(**kw)


def load_config(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def resolved_configs(cfg: ExperimentConfig, n: int) -> list[LearnerConfig]:
    dim = cfg.effective_dim
    return [spec.resolve(n, dim, where=f"learners[{i}]") for i, spec in enumerate(cfg.learners)]


def validate(cfg: ExperimentConfig) -> None:
    """Resolve every (learner, n) pair eagerly so bad fields fail before any work."""
    if cfg.data is None:
        cfg.spec
    for n in cfg.n:
        resolved_configs(cfg, n)
    if cfg.data is not None and any(l.kind.startswith("oracle") for l in cfg.learners):
        raise ConfigError("oracle learners need known support; ingested data has none",
                          field="learners")


# -- running ---------------------------------------------------------------

def run_grid(cfg: ExperimentConfig, ns=None, threads: int | None = None):
    """All (n, trial) cells; returns ``{n: [[RunResult per learner] per trial]}``."""
    ns = list(cfg.n if ns is None else ns)
    threads = threads or cfg.threads or default_threads()
    tasks = []
    for n in ns:
        configs = resolved_configs(cfg, n)
        for t in range(cfg.trials):
            tasks.append((cfg.spec, n, configs, cfg.stop, t, cfg.seed, cfg.checkpoints))
    cells = map_cells(tasks, threads)
    out: dict[int, list] = {n: [] for n in ns}
    for task, cell in zip(tasks, cells):
        out[task[1]].append(cell)
    return out


def run_on_data(cfg: ExperimentConfig, path):
    """Trials on a fixed ingested pool; only the learner seed varies."""
    dataset = load_dataset(path)
    configs = resolved_configs(cfg, dataset.n)
    trials = []
    for t in range(cfg.trials):
        _, learner_seed = trial_seeds(cfg.seed, t)
        row = []
        for c in configs:
            c = replace(c, seed=learner_seed)
            qlog = run_episode(dataset, c, cfg.stop)
            row.append((score_run(qlog, dataset, cfg.checkpoints, kind=c.kind, trial=t), qlog))
        trials.append(row)
    return dataset, trials


# -- CSV formatting ----------------------------------------------------------

def fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def results_header(checkpoints: int) -> list[str]:
    return (["kind", "D", "n", "trial", "seed", "m", "sigma", "Q", "Q_opt", "excess",
             "n_pos", "q_opt_kind", "auc", "n_fallback"]
            + [f"recall_{k}" for k in range(1, checkpoints + 1)])


def result_row(r, config: LearnerConfig) -> list[str]:
    sigma = config.sigma if config.kind == "ucb" else None
    m = config.m if config.kind in EXPLORE_KINDS else None
    return [fmt(v) for v in (r.kind, r.dim, r.n, r.trial, r.seed, m, sigma, r.Q, r.Q_opt,
                             r.excess, r.n_pos, r.q_opt_kind, r.auc, r.n_fallback)] + \
        [fmt(v) for v in r.recall_curve]


def sweep_rows(sweep) -> list[list[str]]:
    return [[fmt(v) for v in (sweep.kind, sweep.dim, r.n, r.trials, r.mean_excess,
                              r.std_excess, r.ci95_low, r.ci95_high, r.mean_auc, r.mean_Q)]
            for r in sweep.rows]


def rate_row(kind, dim, fit) -> list[str]:
    return [fmt(v) for v in (kind, dim, fit.slope, fit.slope_ci95[0], fit.slope_ci95[1],
                             fit.intercept, fit.r_squared, theoretical_exponent(kind, dim))]


def write_csv(path, comment: str, header, rows) -> None:
    lines = [comment, ",".join(header)] + [",".join(r) for r in rows]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_sweep_csv(path):
    """Parse a sweep CSV into ``{(kind, D): [(n, mean_excess), ...]}``."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [l for l in fh if l.strip() and not l.lstrip().startswith("#")]
    if not lines:
        raise ConfigError(f"{path}: empty sweep file")
    reader = csv.DictReader(lines)
    missing = {"kind", "D", "n", "mean_excess"} - set(reader.fieldnames or [])
    if missing:
        raise ConfigError(f"{path}: missing columns {sorted(missing)}")
    groups: dict[tuple[str, int], list[tuple[int, float]]] = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            key = (row["kind"], int(row["D"]))
            groups.setdefault(key, []).append((int(row["n"]), float(row["mean_excess"])))
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: malformed data row {lineno}") from None
        rows.append(row)
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    return groups


def fit_groups(groups):
    """Fit every (kind, D) group; returns (rate rows, warnings)."""
    out, warnings = [], []
    for (kind, dim), pts in sorted(groups.items()):
        if kind not in KINDS:
            warnings.append(f"unknown learner kind {kind!r}; skipped")
            continue
        pts.sort()
        try:
            fit = fit_power_law([p[0] for p in pts], [p[1] for p in pts])
        except InsufficientDataError as exc:
            warnings.append(f"{kind} (D={dim}): rate fit skipped, {exc}")
            continue
        if fit.dropped:
            warnings.append(f"{kind} (D={dim}): dropped non-positive mean rows at n={list(fit.dropped)}")
        out.append(rate_row(kind, dim, fit))
    return out, warnings


def sweep_outputs(cfg: ExperimentConfig, grid):
    """Aggregate a grid into (results rows, sweeps, rate rows, warnings, report)."""
    dim = cfg.effective_dim
    result_lines = []
    per_kind: dict[int, list] = {i: [] for i in range(len(cfg.learners))}
    for n in sorted(grid):
        configs = resolved_configs(cfg, n)
        for cell in grid[n]:
            for i, r in enumerate(cell):
                per_kind[i].append(r)
                result_lines.append(result_row(r, configs[i]))
    sweeps = []
    warnings = []
    rate_lines = []
    for i, spec in enumerate(cfg.learners):
        sweep = summarize_sweep(per_kind[i])
        sweeps.append(sweep)
        if len(sweep.rows) < 3:
            warnings.append(f"{spec.kind}: {len(sweep.rows)} n values, rate fit skipped (need 3)")
            continue
        try:
            fit = fit_power_law(sweep.ns, [r.mean_excess for r in sweep.rows])
        except InsufficientDataError as exc:
            warnings.append(f"{spec.kind}: rate fit skipped, {exc}")
            continue
        if fit.dropped:
            warnings.append(f"{spec.kind}: dropped non-positive mean rows at n={list(fit.dropped)}")
        rate_lines.append(rate_row(spec.kind, dim, fit))
    report = None
    kinds = [s.kind for s in sweeps]
    if len(set(kinds)) == len(kinds):
        report = compare_learners(sweeps, max(grid))
    return result_lines, sweeps, rate_lines, warnings, report


__all__ = [
    "ExperimentConfig", "LearnerSpec", "parse_config", "load_config", "validate",
    "run_grid", "run_on_data", "sweep_outputs", "fit_groups", "read_sweep_csv",
    "write_csv", "results_header", "result_row", "sweep_rows", "SWEEP_COLUMNS",
    "RATE_COLUMNS",
]
