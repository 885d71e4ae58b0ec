"""Simulator for the active covering problem.

Retrieve every positive example of an unlabeled pool with as few label
queries as possible, and measure how far each query strategy falls short of
the learner that knows the true positive support.
"""

__version__ = "0.1.0"

from .errors import (
    ActiveCoverError,
    CapabilityError,
    ConfigError,
    FormatError,
    InsufficientDataError,
    LearnerStateError,
    ProtocolError,
    SamplingError,
)
from .distributions import (
    Ball,
    Box,
    ComponentSpec,
    Dataset,
    DistributionSpec,
    contains_positive_support,
    load_dataset,
    make_preset,
    sample_dataset,
    save_dataset,
)
from .learners import (
    KINDS,
    LearnerConfig,
    epsilon_radius,
    make_learner,
    recommended_m,
)
from .simulation import (
    QueryLog,
    RunResult,
    StopRule,
    q_opt,
    run_episode,
    run_trials,
    score_run,
)
from .analysis import (
    RateFit,
    SweepResult,
    compare_learners,
    fit_power_law,
    summarize_sweep,
    theoretical_exponent,
)
from .rng import mix64

__all__ = [
    "ActiveCoverError", "CapabilityError", "ConfigError", "FormatError",
    "InsufficientDataError", "LearnerStateError", "ProtocolError", "SamplingError",
    "Ball", "Box", "ComponentSpec", "Dataset", "DistributionSpec",
    "contains_positive_support", "load_dataset", "make_preset", "sample_dataset",
    "save_dataset", "KINDS", "LearnerConfig", "epsilon_radius", "make_learner",
    "recommended_m", "QueryLog", "RunResult", "StopRule", "q_opt", "run_episode",
    "run_trials", "score_run", "RateFit", "SweepResult", "compare_learners",
    "fit_power_law", "summarize_sweep", "theoretical_exponent", "mix64",
]
