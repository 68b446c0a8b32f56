"""Sparse linear contextual bandits with online hard thresholding and debiased inference.

Modules:

- ``env``: data-generating process, oracle policy and CSV replay datasets
- ``policy``: epsilon-greedy / exploration-free schedules and propensities
- ``learner``: online hard-thresholding estimator
- ``debias``: de-correlation matrices and the IPW / AW debiased estimators
- ``inference``: standard errors, intervals, tests and policy-value inference
- ``harness``: trials, replicated experiments, replay and file export
"""

from .debias import build_decorr, mu_schedule
from .env import ArmParams, ScenarioConfig
from .harness import (
    ExperimentConfig,
    InferenceConfig,
    LearnerSettings,
    TrajectoryLog,
    infer,
    run_experiment,
    run_replay,
    run_trial,
)
from .learner import HTConfig
from .policy import ExplorationSchedule

__version__ = "0.1.0"

__all__ = [
    "ArmParams",
    "ExperimentConfig",
    "ExplorationSchedule",
    "HTConfig",
    "InferenceConfig",
    "LearnerSettings",
    "ScenarioConfig",
    "TrajectoryLog",
    "build_decorr",
    "infer",
    "mu_schedule",
    "run_experiment",
    "run_replay",
    "run_trial",
]
