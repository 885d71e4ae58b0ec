import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from active_cover import RunResult, compare_learners, fit_power_law, summarize_sweep, theoretical_exponent
from active_cover.analysis import Z95, SweepResult, SweepRow
from active_cover.errors import ConfigError, InsufficientDataError


def result(kind, n, excess, dim=2, auc=0.5):
    return RunResult(Q=excess + 10, Q_opt=10, excess=excess, n_pos=5, recall_curve=(auc,), auc=auc,
                     q_opt_kind="support-count", kind=kind, n=n, dim=dim)


def test_exact_square_root_law():
    fit = fit_power_law([100, 1000, 10000], [3 * n**0.5 for n in (100, 1000, 10000)])
    assert fit.slope == pytest.approx(0.5, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.intercept == pytest.approx(math.log(3), abs=1e-9)


def test_exact_two_thirds_law():
    ns = [1e3, 1e4, 1e5]
    assert fit_power_law(ns, [7.5 * n ** (2 / 3) for n in ns]).slope == pytest.approx(2 / 3, abs=1e-9)


@given(st.lists(st.integers(10, 10**7), min_size=3, max_size=8, unique=True),
       st.floats(-1.5, 2.0), st.floats(0.01, 100.0))
@settings(max_examples=150, deadline=None)
def test_planted_exponent_recovered(ns, b, c):
    fit = fit_power_law(ns, [c * n**b for n in ns])
    assert abs(fit.slope - b) <= 1e-9


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_one_percent_noise_moves_slope_little(seed):
    rng = np.random.default_rng(seed)
    ns = np.array([4000, 8000, 16000, 32000, 64000])
    means = 2 * ns**0.5 * (1 + rng.choice([-0.01, 0.01], size=ns.size))
    assert abs(fit_power_law(ns, means).slope - 0.5) <= 0.02


def test_worst_case_one_percent_perturbation():
    # Largest possible slope error: -1% on the low half, +1% on the high half.
    ns = np.array([4000, 8000, 16000, 32000, 64000])
    x = np.log(ns)
    w = (x - x.mean()) / np.sum((x - x.mean()) ** 2)
    worst = np.sum(np.abs(w)) * math.log(1.01 / 0.99) / 2
    assert worst < 0.02
    means = ns**0.5 * np.where(x > x.mean(), 1.01, 0.99)
    assert abs(fit_power_law(ns, means).slope - 0.5) <= worst + 1e-12


def test_non_positive_rows_dropped():
    fit = fit_power_law([10, 100, 1000, 10000], [-1.0, 10, 100, 1000])
    assert fit.dropped == (10,)
    assert fit.slope == pytest.approx(1.0)


def test_too_few_rows():
    with pytest.raises(InsufficientDataError):
        fit_power_law([10, 100], [1, 2])
    with pytest.raises(InsufficientDataError):
        fit_power_law([10, 100, 1000], [0, 2, 3])


@pytest.mark.parametrize("kind, dim, expected", [
    ("passive", 3, 1.0), ("offline", 2, 2 / 3), ("explore-commit", 2, 0.5),
    ("explore-commit", 1, 0.0), ("ucb", 4, 0.75), ("oracle-uniform", 2, 0.0),
])
def test_theoretical_exponent(kind, dim, expected):
    assert theoretical_exponent(kind, dim) == pytest.approx(expected)


def test_constant_sample_summary():
    row = summarize_sweep([result("passive", 100, 10) for _ in range(4)]).row(100)
    assert (row.mean_excess, row.std_excess, row.ci95_low, row.ci95_high) == (10, 0, 10, 10)


def test_two_value_ci():
    row = summarize_sweep([result("passive", 100, 0), result("passive", 100, 20)]).row(100)
    half = Z95 * (np.std([0, 20], ddof=1) / math.sqrt(2))
    assert row.mean_excess == 10
    assert row.ci95_high - 10 == pytest.approx(half)
    assert half == pytest.approx(1.96 * 14.142135 / math.sqrt(2), rel=1e-4)


def test_single_trial_has_no_ci():
    row = summarize_sweep([result("passive", 100, 3)]).row(100)
    assert math.isnan(row.ci95_low) and math.isnan(row.std_excess)


def test_mixed_kinds_rejected():
    with pytest.raises(ConfigError, match="one learner kind"):
        summarize_sweep([result("passive", 100, 1), result("offline", 100, 1)])


def test_rows_sorted_by_n_and_dict_input():
    sweep = summarize_sweep({("ucb", 1000): [result("ucb", 1000, 5)],
                             ("ucb", 100): [result("ucb", 100, 1)]})
    assert sweep.ns == [100, 1000]


def _sweep(kind, mean, half):
    return SweepResult(kind, 2, (SweepRow(64000, 20, mean, 1.0, mean - half, mean + half, 0.5, mean),))


def test_strict_ordering():
    report = compare_learners([_sweep("passive", 400, 10), _sweep("ec", 100, 10), _sweep("off", 200, 10)], 64000)
    assert report.strict
    assert report.ordering == "ec < off < passive"
    assert report.precedes("ec", "passive")


def test_overlap_is_a_tie():
    report = compare_learners([_sweep("a", 100, 60), _sweep("b", 200, 60)], 64000)
    assert not report.strict
    assert not report.precedes("a", "b")
    assert report.ordering == "a ~ b"


def test_single_sweep_report():
    report = compare_learners([_sweep("a", 100, 1)], 64000)
    assert report.pairs == () and not report.strict
    assert "ordering: a" in report.to_text()
