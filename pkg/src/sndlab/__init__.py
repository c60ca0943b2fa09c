"""Behavioral-diversity metrics for stochastic multi-agent policies.

Core pipeline: roll out the current policies to collect an observation batch,
evaluate the closed-form W2 distance between every agent pair's action
distributions over that batch, aggregate the resulting distance matrix into
the SND scalar (mean pairwise distance) and the complementary HSE entropy
integral.  A small policy-gradient trainer, three 2D multi-agent tasks, a
diversity set-point controller and statistical post-processing reproduce the
metric's characteristic phenomena end to end.
"""

from .analysis import (
    AggregateCurves,
    NoiseSweepRow,
    SampleSummary,
    WelchResult,
    aggregate_seeds,
    noise_robustness_sweep,
    welch_t_test,
)
from .control import DiversityTarget, diversity_penalty, optimal_snd_for_clusters
from .distance import (
    BehavioralDistanceMatrix,
    RolloutBatch,
    agent_contributions,
    collect_batch,
    distance_matrix,
    pairwise_distance,
)
from .distributions import (
    STD_FLOOR,
    DiagonalGaussian,
    hellinger,
    kl_divergence,
    wasserstein2,
)
from .envs import (
    WindSchedule,
    differential_steering_env,
    flocking_wind_env,
    goal_navigation_env,
)
from .metrics import (
    Dendrogram,
    build_dendrogram,
    cluster_matrix,
    equidistant_matrix,
    hse,
    shannon_entropy,
    snd,
    snd_redundancy_formula,
)
from .policies import PolicySet, PolicyShape
from .training import (
    TrainerConfig,
    TrainingDivergedError,
    TrainingLog,
    WindExperimentConfig,
    gae_advantages,
    train,
    train_multi_seed,
    wind_resilience_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateCurves",
    "BehavioralDistanceMatrix",
    "Dendrogram",
    "DiagonalGaussian",
    "DiversityTarget",
    "NoiseSweepRow",
    "PolicySet",
    "PolicyShape",
    "RolloutBatch",
    "STD_FLOOR",
    "SampleSummary",
    "TrainerConfig",
    "TrainingDivergedError",
    "TrainingLog",
    "WelchResult",
    "WindExperimentConfig",
    "WindSchedule",
    "agent_contributions",
    "aggregate_seeds",
    "build_dendrogram",
    "cluster_matrix",
    "collect_batch",
    "differential_steering_env",
    "distance_matrix",
    "diversity_penalty",
    "equidistant_matrix",
    "flocking_wind_env",
    "gae_advantages",
    "goal_navigation_env",
    "hellinger",
    "hse",
    "kl_divergence",
    "noise_robustness_sweep",
    "optimal_snd_for_clusters",
    "pairwise_distance",
    "shannon_entropy",
    "snd",
    "snd_redundancy_formula",
    "train",
    "train_multi_seed",
    "wasserstein2",
    "welch_t_test",
    "wind_resilience_experiment",
]
