"""Scikit-learn style facade over the voting optimizers.

``fit`` takes the agents' signal models and computes the optimal policy for
the configured prior, costs, and fusion rule; ``predict`` runs the fitted
voting protocol on a matrix of private signals and returns team decisions.
Hyperparameters live in ``__init__`` untouched (so ``get_params`` and
``set_params`` compose with the wider ecosystem) and all validation happens
in ``fit``, per the usual estimator contract.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import as_model_sequence, as_signal_matrix, check_positive, check_probability
from .core import CostModel, FusionRule, Prior
from .partial import ObservationGraph, optimal_partial_policy
from .public import optimal_public_policy
from .scenarios import Scenario
from .secret import optimal_secret_thresholds
from .simulate import _observed_positions, _threshold_tables, protocol_votes

__all__ = [
    "SecretVotingOptimizer",
    "PublicVotingOptimizer",
    "PartialVotingOptimizer",
]


class _VotingOptimizerBase(BaseEstimator):
    _mode = "secret"

    def __init__(self, p0=0.5, cost_false_alarm=1.0, cost_missed_detection=1.0, votes_needed=1):
        self.p0 = p0
        self.cost_false_alarm = cost_false_alarm
        self.cost_missed_detection = cost_missed_detection
        self.votes_needed = votes_needed

    def _problem(self, X):
        models = as_model_sequence(X)
        prior = Prior(check_probability(self.p0, "p0", interior=True))
        costs = CostModel(
            check_positive(self.cost_false_alarm, "cost_false_alarm"),
            check_positive(self.cost_missed_detection, "cost_missed_detection"),
        )
        rule = FusionRule(int(self.votes_needed), len(models))
        return models, prior, costs, rule

    def _check_fitted(self):
        if not hasattr(self, "risk_"):
            raise RuntimeError(
                f"this {type(self).__name__} instance is not fitted yet; call fit first"
            )

    def predict_votes(self, X) -> np.ndarray:
        """Per-agent votes (0/1) for each row of private signals."""
        self._check_fitted()
        X = as_signal_matrix(X, self.n_agents_)
        tables = _threshold_tables(self.scenario_, self._policy_object())
        observed = _observed_positions(
            self._mode, self.n_agents_, getattr(self, "graph_", None)
        )
        return protocol_votes(X, tables, observed)

    def predict(self, X) -> np.ndarray:
        """Fused team decision (0/1) for each row of private signals.

        Columns are agents in acting order, matching the models given to fit.
        """
        votes = self.predict_votes(X)
        return (votes.sum(axis=1) >= int(self.votes_needed)).astype(np.int64)


class SecretVotingOptimizer(_VotingOptimizerBase):
    """Optimal fixed thresholds for agents who never see each other's votes.

    Attributes after fit: ``thresholds_`` (per agent), ``risk_``,
    ``team_errors_``, ``solution_``.
    """

    _mode = "secret"

    def fit(self, X, y=None):
        models, prior, costs, rule = self._problem(X)
        solution = optimal_secret_thresholds(prior, costs, models, rule)
        self.n_agents_ = len(models)
        self.scenario_ = Scenario(prior, costs, models, rule, mode="secret")
        self.solution_ = solution
        self.thresholds_ = np.array(solution.thresholds)
        self.risk_ = solution.risk
        self.team_errors_ = solution.team_errors
        return self

    def _policy_object(self):
        return self.solution_


class PublicVotingOptimizer(_VotingOptimizerBase):
    """Optimal history-dependent thresholds when all votes are broadcast.

    Models passed to fit are taken in acting order.  Attributes after fit:
    ``policy_`` (thresholds per vote history), ``risk_``, ``team_errors_``.
    """

    _mode = "public"

    def fit(self, X, y=None):
        models, prior, costs, rule = self._problem(X)
        policy, report = optimal_public_policy(prior, costs, models, rule)
        self.n_agents_ = len(models)
        self.scenario_ = Scenario(prior, costs, models, rule, mode="public")
        self.policy_ = policy
        self.risk_ = report.risk
        self.team_errors_ = report.team_errors
        return self

    def _policy_object(self):
        return self.policy_


class PartialVotingOptimizer(_VotingOptimizerBase):
    """Optimal thresholds when each agent sees only a subset of prior votes.

    ``observes`` lists, per acting position, the earlier positions whose
    votes that agent can see (for example ``[[], [0], [1]]`` is a chain).
    Attributes after fit: ``policy_``, ``risk_``, ``team_errors_``.
    """

    _mode = "partial"

    def __init__(
        self,
        p0=0.5,
        cost_false_alarm=1.0,
        cost_missed_detection=1.0,
        votes_needed=1,
        observes=None,
    ):
        super().__init__(p0, cost_false_alarm, cost_missed_detection, votes_needed)
        self.observes = observes

    def fit(self, X, y=None):
        models, prior, costs, rule = self._problem(X)
        if self.observes is None:
            graph = ObservationGraph.empty(len(models))
        else:
            graph = ObservationGraph(tuple(tuple(obs) for obs in self.observes))
        policy, report = optimal_partial_policy(prior, costs, models, rule, graph)
        self.n_agents_ = len(models)
        self.scenario_ = Scenario(prior, costs, models, rule, mode="partial", graph=graph)
        self.graph_ = graph
        self.policy_ = policy
        self.risk_ = report.risk
        self.team_errors_ = report.team_errors
        return self

    def _policy_object(self):
        return self.policy_
