"""Command-line front end: ``active-cover {run,sweep,gen-data,fit-rate}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .distributions import PRESETS, make_preset, sample_dataset, save_dataset
from .errors import ActiveCoverError, ConfigError
from .experiment import (
    RATE_COLUMNS,
    SWEEP_COLUMNS,
    ExperimentConfig,
    fit_groups,
    load_config,
    parse_config,
    read_sweep_csv,
    result_row,
    results_header,
    resolved_configs,
    run_grid,
    run_on_data,
    sweep_outputs,
    sweep_rows,
    validate,
    write_csv,
)
from .learners import KINDS

log = logging.getLogger("active_cover")


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON experiment config")
    p.add_argument("--learner", action="append", choices=KINDS, metavar="KIND",
                   help=f"learner kind (repeatable): {', '.join(KINDS)}")
    p.add_argument("--n", action="append", type=int, metavar="INT", help="pool size (repeatable)")
    p.add_argument("--dim", type=int, metavar="INT")
    p.add_argument("--p", type=float, metavar="FLOAT", help="mixture probability of a positive")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--m", metavar="INT|recommended", help="initial sample size rule")
    p.add_argument("--sigma", metavar="FLOAT|auto", help="UCB radius scale rule")
    p.add_argument("--trials", type=int, metavar="INT")
    p.add_argument("--seed", type=int, metavar="INT", help="base seed")
    p.add_argument("--stop", metavar="all|budget:K")
    p.add_argument("--checkpoints", type=int, metavar="INT")
    p.add_argument("--data", metavar="PATH", help="run on a CSV pool instead of sampling (run only)")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--threads", type=int, metavar="INT")
    p.add_argument("--emit-query-logs", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="active-cover",
        description="Simulate active covering learners and measure excess query cost.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="trials of one or more learners at a single n")
    _add_experiment_flags(run)

    sweep = sub.add_parser("sweep", help="all (learner, n, trial) cells plus rate fits")
    _add_experiment_flags(sweep)

    gen = sub.add_parser("gen-data", help="sample a pool from a preset and write it as CSV")
    gen.add_argument("--preset", choices=PRESETS, default="cube-overlap")
    gen.add_argument("--dim", type=int, default=2)
    gen.add_argument("--p", type=float, default=0.3)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, metavar="PATH")

    fit = sub.add_parser("fit-rate", help="fit power-law exponents to a sweep CSV")
    fit.add_argument("sweep_csv", metavar="SWEEP_CSV")
    fit.add_argument("--out", metavar="PATH", help="rate-fit CSV (default: rates.csv next to input)")
    return parser


def experiment_from_args(args) -> ExperimentConfig:
    """Merge defaults < config file < flags."""
    raw = load_config(args.config) if args.config else {}
    overrides = {
        "n": args.n, "dim": args.dim, "p": args.p, "preset": args.preset,
        "trials": args.trials, "seed": args.seed, "stop": args.stop,
        "checkpoints": args.checkpoints, "data": args.data, "out": args.out,
        "threads": args.threads, "emit_query_logs": args.emit_query_logs,
    }
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value
    if args.preset is not None:
        raw.pop("distribution", None)
    if args.learner:
        raw["learners"] = [{"kind": k} for k in args.learner]
    if args.m is not None or args.sigma is not None:
        entries = raw.get("learners") or [{"kind": "explore-commit"}]
        entries = [{"kind": e} if isinstance(e, str) else dict(e) for e in entries]
        for e in entries:
            if args.m is not None:
                e["m"] = args.m
            if args.sigma is not None:
                e["sigma"] = args.sigma
        raw["learners"] = entries
    cfg = parse_config(raw)
    validate(cfg)
    return cfg


def cmd_run(args) -> int:
    cfg = experiment_from_args(args)
    out = Path(cfg.out)
    header = results_header(cfg.checkpoints)
    rows = []
    logs = []
    if cfg.data is not None:
        dataset, trials = run_on_data(cfg, cfg.data)
        configs = resolved_configs(cfg, dataset.n)
        per_learner = [[] for _ in configs]
        for trial in trials:
            for i, (res, qlog) in enumerate(trial):
                per_learner[i].append(res)
                rows.append(result_row(res, configs[i]))
                logs.append((res, qlog))
        n = dataset.n
    else:
        if len(cfg.n) != 1:
            raise ConfigError(f"run takes a single n, got {list(cfg.n)}; use sweep", field="n")
        n = cfg.n[0]
        configs = resolved_configs(cfg, n)
        grid = run_grid(cfg)
        per_learner = [[] for _ in configs]
        for cell in grid[n]:
            for i, res in enumerate(cell):
                per_learner[i].append(res)
                rows.append(result_row(res, configs[i]))
    comment = cfg.header_comment()
    write_csv(out / "results.csv", comment, header, rows)
    if cfg.emit_query_logs:
        _write_query_logs(cfg, out, logs)
    for spec, results in zip(cfg.learners, per_learner):
        mean_excess = sum(r.excess for r in results) / len(results)
        mean_auc = sum(r.auc for r in results) / len(results)
        print(f"{spec.kind}: n={n} trials={len(results)} mean_excess={mean_excess:.2f} "
              f"mean_auc={mean_auc:.4f} q_opt={results[0].q_opt_kind}")
    return 0


def _write_query_logs(cfg, out, logs):
    """Query logs for every (learner, trial); re-runs episodes when needed."""
    from .rng import trial_seeds
    from .simulation import run_episode

    target = out / "logs"
    target.mkdir(parents=True, exist_ok=True)
    comment = cfg.header_comment()
    if logs:
        for res, qlog in logs:
            (target / f"{res.kind}_n{res.n}_t{res.trial}.csv").write_text(
                comment + "\n" + qlog.to_csv(), encoding="utf-8")
        return
    for n in cfg.n:
        configs = resolved_configs(cfg, n)
        for t in range(cfg.trials):
            data_seed, learner_seed = trial_seeds(cfg.seed, t)
            dataset = sample_dataset(cfg.spec, n, data_seed)
            for c in configs:
                qlog = run_episode(dataset, replace(c, seed=learner_seed), cfg.stop)
                (target / f"{c.kind}_n{n}_t{t}.csv").write_text(
                    comment + "\n" + qlog.to_csv(), encoding="utf-8")


def cmd_sweep(args) -> int:
    cfg = experiment_from_args(args)
    if cfg.data is not None:
        raise ConfigError("sweep samples pools from a distribution; use run for --data", field="data")
    out = Path(cfg.out)
    grid = run_grid(cfg)
    result_lines, sweeps, rate_lines, warnings, report = sweep_outputs(cfg, grid)
    comment = cfg.header_comment()
    write_csv(out / "results.csv", comment, results_header(cfg.checkpoints), result_lines)
    write_csv(out / "sweep.csv", comment, SWEEP_COLUMNS, [r for s in sweeps for r in sweep_rows(s)])
    for w in warnings:
        log.warning(w)
    if rate_lines:
        write_csv(out / "rates.csv", comment, RATE_COLUMNS, rate_lines)
    if report is not None:
        (out / "comparison.txt").write_text(comment + "\n" + report.to_text(), encoding="utf-8")
        print(report.to_text(), end="")
    if cfg.emit_query_logs:
        _write_query_logs(cfg, out, [])
    for line in rate_lines:
        print(f"{line[0]}: slope={float(line[2]):.4f} "
              f"ci95=[{float(line[3]):.4f}, {float(line[4]):.4f}] theory={float(line[7]):.4f}")
    return 0


def cmd_gen_data(args) -> int:
    spec = make_preset(args.preset, args.dim, args.p)
    dataset = sample_dataset(spec, args.n, args.seed)
    comment = (f"active-cover version={__version__} preset={args.preset} dim={args.dim} "
               f"p={args.p!r} n={args.n} seed={args.seed}")
    try:
        save_dataset(dataset, args.out, comment=comment)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
        return 1
    print(f"wrote {dataset.n} points ({dataset.n_pos} positive) to {args.out}")
    return 0


def cmd_fit_rate(args) -> int:
    groups = read_sweep_csv(args.sweep_csv)
    rows, warnings = fit_groups(groups)
    for w in warnings:
        log.warning(w)
    if not rows:
        print("error: no learner had enough rows to fit", file=sys.stderr)
        return 1
    out = Path(args.out) if args.out else Path(args.sweep_csv).with_name("rates.csv")
    comment = f"# active-cover version={__version__} source={Path(args.sweep_csv).name}"
    write_csv(out, comment, RATE_COLUMNS, rows)
    for line in rows:
        print(f"{line[0]} (D={line[1]}): slope={float(line[2]):.4f} theory={float(line[7]):.4f}")
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "gen-data": cmd_gen_data, "fit-rate": cmd_fit_rate}


def main(argv=None) -> int:
    logging.basicConfig(format="warning: %(message)s", level=logging.WARNING, stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ActiveCoverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
