"""Simulation of sequential item consumption under recommendation regimes.

Users hold correlated Gaussian beliefs over a ring of items, consume
myopically by certainty equivalent, and update beliefs after each
realization. The package sweeps model parameters over populations of
users, compares no-recommendation, recommendation, and oracle regimes,
and writes trajectory and metric tables as CSV.
"""

from ._version import __version__
from .beliefs import (
    NO_RECOMMENDATION,
    ORACLE,
    RECOMMENDATION,
    REGIMES,
    BeliefState,
    batch_condition,
    certainty_equivalent,
    condition_on_observation,
    init_beliefs,
)
from .engine import (
    GridPoint,
    RunDataset,
    SweepConfig,
    WorkEstimateWarning,
    aggregate_tables,
    paper_config,
    read_trajectories,
    run_sweep,
)
from .errors import ConfigError, InvariantError, NumericalError
from .metrics import (
    MetricRecord,
    aggregate_with_ci,
    consecutive_distance_series,
    diversity,
    homogeneity,
    jaccard,
    pearson_correlation,
    recommendation_value,
    welfare,
)
from .policy import Trajectory, choose_next, run_trajectory
from .product_space import (
    ModelParams,
    Population,
    UserGroundTruth,
    build_covariance,
    circular_distance,
    circular_distances,
    sample_population,
)
from .seeding import derive_seed

__all__ = [
    "__version__",
    "BeliefState",
    "ConfigError",
    "GridPoint",
    "InvariantError",
    "MetricRecord",
    "ModelParams",
    "NO_RECOMMENDATION",
    "NumericalError",
    "ORACLE",
    "Population",
    "RECOMMENDATION",
    "REGIMES",
    "RunDataset",
    "SweepConfig",
    "Trajectory",
    "UserGroundTruth",
    "WorkEstimateWarning",
    "aggregate_tables",
    "aggregate_with_ci",
    "batch_condition",
    "build_covariance",
    "certainty_equivalent",
    "choose_next",
    "circular_distance",
    "circular_distances",
    "condition_on_observation",
    "consecutive_distance_series",
    "derive_seed",
    "diversity",
    "homogeneity",
    "init_beliefs",
    "jaccard",
    "paper_config",
    "pearson_correlation",
    "read_trajectories",
    "recommendation_value",
    "run_sweep",
    "run_trajectory",
    "sample_population",
    "welfare",
]
