import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from active_cover import (
    Dataset,
    LearnerConfig,
    StopRule,
    make_preset,
    mix64,
    q_opt,
    run_episode,
    run_trials,
    sample_dataset,
    score_run,
)
from active_cover.errors import ConfigError
from active_cover.learners import KINDS
from active_cover.rng import trial_seeds
from active_cover.simulation import QueryLog, recall_curve

LINE = Dataset(np.array([[0.0], [0.1], [0.3], [0.35], [0.9]]), [True, True, False, True, False])


def test_mix64_known_vector():
    # splitmix64 finalizer applied to 0 + golden gamma
    assert mix64(0, 0) == 0xE220A8397B1DCDAF


def test_trial_seeds_are_distinct_streams():
    seeds = {s for t in range(1000) for s in trial_seeds(42, t)}
    assert len(seeds) == 2000


# --- stop rules ----------------------------------------------------------------

@pytest.mark.parametrize("text, mode, budget", [("all", "all", None), ("budget:7", "budget", 7)])
def test_stop_rule_parse(text, mode, budget):
    rule = StopRule.parse(text)
    assert (rule.mode, rule.budget) == (mode, budget)
    assert str(rule) == text


@pytest.mark.parametrize("text", ["budget:", "budget:0", "budget:x", "sometimes"])
def test_stop_rule_rejects(text):
    with pytest.raises(ConfigError):
        StopRule.parse(text)


# --- episodes ------------------------------------------------------------------------

def test_all_positive_pool():
    ds = Dataset(np.random.default_rng(0).random((30, 2)), np.ones(30, bool), np.ones(30, bool))
    for kind in KINDS:
        cfg = LearnerConfig(kind, m=3, sigma=1.0 if kind == "ucb" else None)
        res = score_run(run_episode(ds, cfg), ds)
        assert (res.Q, res.excess) == (30, 0)


def test_hand_example_log():
    log = run_episode(LINE, LearnerConfig("explore-commit", m=1), initial_sample=[0])
    assert log.indices.tolist() == [0, 1, 2, 3]
    assert log.cum_positives.tolist() == [1, 2, 2, 3]
    assert log.steps.tolist() == [1, 2, 3, 4]


def test_budget_cut():
    log = run_episode(LINE, LearnerConfig("passive", seed=1), StopRule("budget", 2))
    assert log.Q == 2


def test_no_positives_means_no_queries():
    ds = Dataset(np.zeros((4, 1)), [False] * 4)
    assert run_episode(ds, LearnerConfig("passive")).Q == 0


def test_query_log_csv():
    log = run_episode(LINE, LearnerConfig("ucb", m=1, sigma=1.0), initial_sample=[0])
    lines = log.to_csv().splitlines()
    assert lines[0] == "step,index,label,fallback"
    assert lines[2] == "2,1,1,1"  # epsilon is zero with one positive -> fallback


# --- optimal cost -------------------------------------------------------------------

def test_q_opt_variants():
    ds = sample_dataset(make_preset("cube-overlap", 2, 0.3), 100000, seed=1)
    opt, kind = q_opt(ds)
    assert kind == "support-count"
    truth = 0.3 + 0.7 / 9
    assert abs(opt / ds.n - truth) <= 3 * math.sqrt(truth * (1 - truth) / ds.n)

    ingested = Dataset(np.zeros((20, 1)), [True] * 12 + [False] * 8)
    assert q_opt(ingested) == (12, "positive-count-lower-bound")
    full = Dataset(np.zeros((5, 1)), [True] * 5, [True] * 5)
    assert q_opt(full) == (5, "support-count")


# --- recall ---------------------------------------------------------------------------

def test_recall_immediate():
    log = QueryLog(np.array([0]), np.array([True]), np.array([False]))
    curve = recall_curve(log, n=100, n_pos=1, checkpoints=20)
    assert np.all(curve == 1.0) and curve.mean() == 1.0


def test_recall_truncated_half():
    log = QueryLog(np.arange(4), np.array([True, False, True, False]), np.zeros(4, bool))
    assert recall_curve(log, n=8, n_pos=4, checkpoints=4)[-1] == 0.5


def test_recall_checkpoints_use_ceiling():
    # n=10, B=3 -> budgets 4, 7, 10
    labels = np.zeros(10, bool)
    labels[[3, 4, 9]] = True
    log = QueryLog(np.arange(10), labels, np.zeros(10, bool))
    assert recall_curve(log, 10, 3, 3).tolist() == [1 / 3, 2 / 3, 1.0]


def test_passive_auc_near_linear_expectation():
    # mean of k/20 for k = 1..20
    expected = np.mean(np.arange(1, 21) / 20)
    assert expected == pytest.approx(0.525)
    spec = make_preset("cube-overlap", 2, 0.3)
    aucs = [r.auc for r in run_trials(spec, 20000, LearnerConfig("passive"), StopRule(), 5, 99)]
    assert np.mean(aucs) == pytest.approx(expected, abs=0.01)


@given(st.integers(2, 300), st.integers(0, 2**32 - 1), st.integers(1, 30))
@settings(max_examples=150, deadline=None)
def test_recall_curve_monotone_and_q_bounded(n, seed, b):
    rng = np.random.default_rng(seed)
    kind = KINDS[seed % len(KINDS)]
    p = float(rng.uniform(0.05, 0.9))
    ds = sample_dataset(make_preset("cube-overlap", 1 + seed % 3, p), n, seed)
    cfg = LearnerConfig(kind, m=min(10, n), sigma=0.7 if kind == "ucb" else None, seed=seed)
    log = run_episode(ds, cfg)
    curve = recall_curve(log, n, ds.n_pos, b)
    assert np.all(np.diff(curve) >= 0)
    assert np.all((curve >= 0) & (curve <= 1))
    if ds.n_pos:
        assert ds.n_pos <= log.Q <= n
        assert curve[-1] == 1.0
        assert log.labels[-1]


# --- trials ---------------------------------------------------------------------------

def test_single_trial_equals_direct_episode():
    spec = make_preset("two-clusters", 2, 0.3)
    cfg = LearnerConfig("explore-commit", m=20)
    (res,) = run_trials(spec, 600, cfg, StopRule(), 1, base_seed=5)
    data_seed = mix64(5, 0)
    ds = sample_dataset(spec, 600, data_seed)
    log = run_episode(ds, LearnerConfig("explore-commit", m=20, seed=mix64(data_seed, 0)))
    assert res.Q == log.Q and res.seed == data_seed


def test_trials_are_reproducible():
    spec = make_preset("cube-overlap", 2, 0.3)
    cfg = LearnerConfig("ucb", m=10, sigma=0.5)
    assert run_trials(spec, 400, cfg, StopRule(), 4, 3) == run_trials(spec, 400, cfg, StopRule(), 4, 3)


def test_parallel_matches_serial():
    spec = make_preset("cube-overlap", 2, 0.3)
    cfg = LearnerConfig("offline", m=30)
    serial = run_trials(spec, 500, cfg, StopRule(), 3, 8, threads=1)
    parallel = run_trials(spec, 500, cfg, StopRule(), 3, 8, threads=2)
    assert serial == parallel


def _passive_excess_oracle(n, p, reps, seed):
    """Brute force: shuffle labels/support flags, cost = position of the last positive."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(reps):
        pos = rng.random(n) < p
        sup = pos | (rng.random(n) < 1 / 9)
        order = rng.permutation(n)
        last = np.flatnonzero(pos[order])[-1] + 1
        out.append(last - sup.sum())
    return float(np.mean(out))


def test_passive_excess_scales_linearly():
    oracle_small = _passive_excess_oracle(1000, 0.5, 400, 0)
    # the closed form (1-p) n (1 - 1/9) is the large-n limit of the same quantity
    assert oracle_small * 10 == pytest.approx(0.5 * 10000 * 8 / 9, rel=0.05)
    spec = make_preset("cube-overlap", 2, 0.5)
    results = run_trials(spec, 10000, LearnerConfig("passive"), StopRule(), 20, 2024)
    mean_excess = np.mean([r.excess for r in results])
    assert mean_excess == pytest.approx(oracle_small * 10, rel=0.2)
    assert mean_excess == pytest.approx(4444.4, rel=0.2)
