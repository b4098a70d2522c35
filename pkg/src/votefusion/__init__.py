"""Optimal decision strategies for Bayesian teams under L-out-of-N vote fusion.

The library computes person-by-person optimal voting thresholds for teams of
agents performing a binary hypothesis test, under three information regimes:
secret voting (no one sees anyone's vote), public voting (each agent sees all
precedent votes), and partial public voting (each agent sees a declared
subset).  On top of the solvers sit reversed-ROC sweeps, acting-order search,
unanimity-rule checks, a seeded Monte Carlo validator, and a CLI harness.
"""

from .core import (
    CostModel,
    ErrorPair,
    ExponentialModel,
    FusionRule,
    GaussianModel,
    ImpossibleObservationError,
    PolicyIncompleteError,
    Prior,
    RiskReport,
    SignalModel,
    SolverError,
    bayes_risk,
    team_error_pair,
    vote_count_pmf,
)
from .secret import (
    SecretSolution,
    optimal_identical_threshold,
    optimal_secret_thresholds,
    optimal_vote_threshold,
)
from .public import (
    Belief,
    FusionState,
    VotePolicy,
    belief_only_threshold,
    belief_update,
    constant_policy,
    history_belief,
    optimal_public_policy,
    public_bayes_risk,
)
from .partial import (
    ObservationGraph,
    PartialPolicy,
    marginal_belief_update,
    optimal_partial_policy,
    partial_bayes_risk,
)
from .ordering import (
    BestOrderingResult,
    RocCurve,
    RocPoint,
    UnanimityReport,
    agent_informativeness,
    best_ordering,
    default_sweep_weights,
    reversed_roc,
    unanimity_check,
)
from .scenarios import Scenario
from .simulate import SimConfig, SimulationResult, counter_uniforms, simulate_team
from .estimators import (
    PartialVotingOptimizer,
    PublicVotingOptimizer,
    SecretVotingOptimizer,
)
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .cli import run_experiment, run_preset

__version__ = "0.1.0"

__all__ = [
    "Prior",
    "CostModel",
    "ErrorPair",
    "FusionRule",
    "RiskReport",
    "GaussianModel",
    "ExponentialModel",
    "SignalModel",
    "SolverError",
    "ImpossibleObservationError",
    "PolicyIncompleteError",
    "bayes_risk",
    "team_error_pair",
    "vote_count_pmf",
    "SecretSolution",
    "optimal_identical_threshold",
    "optimal_secret_thresholds",
    "optimal_vote_threshold",
    "Belief",
    "FusionState",
    "VotePolicy",
    "belief_update",
    "belief_only_threshold",
    "constant_policy",
    "history_belief",
    "optimal_public_policy",
    "public_bayes_risk",
    "ObservationGraph",
    "PartialPolicy",
    "marginal_belief_update",
    "optimal_partial_policy",
    "partial_bayes_risk",
    "RocCurve",
    "RocPoint",
    "BestOrderingResult",
    "UnanimityReport",
    "agent_informativeness",
    "best_ordering",
    "default_sweep_weights",
    "reversed_roc",
    "unanimity_check",
    "Scenario",
    "SimConfig",
    "SimulationResult",
    "counter_uniforms",
    "simulate_team",
    "SecretVotingOptimizer",
    "PublicVotingOptimizer",
    "PartialVotingOptimizer",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "run_experiment",
    "run_preset",
]
