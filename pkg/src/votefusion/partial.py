"""Belief updates and optimal policies under partial vote visibility.

Each agent sees the votes of a declared subset of her predecessors, so her
threshold can depend only on that observed bit pattern, not on the full
history.  Beliefs marginalize over the unobserved predecessor votes by
explicit enumeration (exactness over scalability, at desk scale), and the
optimizer sweeps agents in acting order because a predecessor's threshold
changes every successor's marginal belief.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .core import (
    CostModel,
    ErrorPair,
    FusionRule,
    ImpossibleObservationError,
    PolicyIncompleteError,
    Prior,
    RiskReport,
    SignalModel,
    SolverError,
    bayes_risk,
)
from .public import Belief, VotePolicy, _state_at
from .secret import (
    MAX_SWEEPS,
    START_QUANTILES,
    STEP_TOL,
    _move_size,
    _quantile_start,
    optimal_secret_thresholds,
    optimal_vote_threshold,
)

__all__ = [
    "ObservationGraph",
    "PartialPolicy",
    "marginal_belief_update",
    "partial_bayes_risk",
    "optimal_partial_policy",
    "Pattern",
]

Pattern = tuple[int, ...]


@dataclass(frozen=True)
class ObservationGraph:
    """For each agent, the acting-order indices whose votes she observes.

    Edges point strictly backward: ``observed[n]`` is a sorted tuple of
    indices below n.  The full and empty graphs are valid special cases.
    """

    observed: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        normalized = []
        for n, obs in enumerate(self.observed):
            obs = tuple(sorted(set(int(m) for m in obs)))
            if any(not 0 <= m < n for m in obs):
                raise ValueError(
                    f"agent {n} may only observe earlier agents, got {obs!r}"
                )
            normalized.append(obs)
        object.__setattr__(self, "observed", tuple(normalized))

    @property
    def n_agents(self) -> int:
        return len(self.observed)

    @classmethod
    def empty(cls, n_agents: int) -> "ObservationGraph":
        return cls(tuple(() for _ in range(n_agents)))

    @classmethod
    def full(cls, n_agents: int) -> "ObservationGraph":
        return cls(tuple(tuple(range(n)) for n in range(n_agents)))

    @classmethod
    def chain(cls, n_agents: int) -> "ObservationGraph":
        """Each agent sees only the vote of the agent right before her."""
        return cls(tuple((n - 1,) if n else () for n in range(n_agents)))

    def pattern_for(self, agent: int, history: str) -> Pattern:
        """The observed bit pattern induced by a full vote history."""
        return tuple(int(history[m]) for m in self.observed[agent])

    def is_full(self) -> bool:
        return all(obs == tuple(range(n)) for n, obs in enumerate(self.observed))


@dataclass(frozen=True)
class PartialPolicy:
    """Thresholds keyed by (agent, observed pattern) information sets."""

    rule: FusionRule
    graph: ObservationGraph
    thresholds: Mapping[tuple[int, Pattern], float]
    ordering: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.graph.n_agents != self.rule.team_size:
            raise ValueError(
                f"graph covers {self.graph.n_agents} agents for a team of {self.rule.team_size}"
            )
        object.__setattr__(self, "thresholds", MappingProxyType(dict(self.thresholds)))

    def threshold_at(self, agent: int, pattern: Pattern) -> float:
        try:
            return self.thresholds[(agent, tuple(pattern))]
        except KeyError:
            raise PolicyIncompleteError(
                f"no threshold for agent {agent} with observed pattern {tuple(pattern)!r}"
            ) from None

    def resolve(self, history: str) -> float:
        """Threshold applied by the next agent given a full vote history."""
        agent = len(history)
        return self.threshold_at(agent, self.graph.pattern_for(agent, history))


def _threshold_lookup(policy, graph: ObservationGraph):
    """Uniform (agent, history-prefix) -> threshold accessor for the policy
    kinds that can drive a voting protocol."""
    if isinstance(policy, PartialPolicy):
        return lambda agent, prefix: policy.threshold_at(
            agent, policy.graph.pattern_for(agent, prefix)
        )
    if isinstance(policy, VotePolicy):
        return lambda agent, prefix: policy.resolve(prefix)
    if isinstance(policy, (tuple, list)):
        thresholds = tuple(policy)
        return lambda agent, prefix: thresholds[agent]
    raise TypeError(f"unsupported policy type {type(policy).__name__}")


def marginal_belief_update(
    prior: Prior,
    models: Sequence[SignalModel],
    policy,
    graph: ObservationGraph,
    agent: int,
    observed: Mapping[int, int],
) -> Belief:
    """Posterior P{state = 0 | votes of the agent's observed set}.

    Sums joint path probabilities over every assignment of the unobserved
    predecessor votes (up to 2^(N-1) terms).  ``observed`` must assign a bit
    to exactly the agent's observed set.  ``policy`` may be a PartialPolicy,
    a VotePolicy, or a per-agent threshold sequence.
    """
    obs_set = graph.observed[agent]
    if set(observed.keys()) != set(obs_set):
        raise ValueError(
            f"observed votes must cover exactly indices {obs_set!r}, got {sorted(observed)!r}"
        )
    for m, v in observed.items():
        if v not in (0, 1):
            raise ValueError(f"vote for agent {m} must be 0 or 1, got {v!r}")
    lookup = _threshold_lookup(policy, graph)

    hidden = [m for m in range(agent) if m not in observed]
    mass0 = 0.0
    mass1 = 0.0
    for bits in itertools.product((0, 1), repeat=len(hidden)):
        votes = dict(observed)
        votes.update(zip(hidden, bits))
        p0 = p1 = 1.0
        prefix = ""
        for m in range(agent):
            errors = models[m].error_pair(lookup(m, prefix))
            if votes[m] == 1:
                p0 *= errors.false_alarm
                p1 *= 1.0 - errors.missed_detection
            else:
                p0 *= 1.0 - errors.false_alarm
                p1 *= errors.missed_detection
            prefix += str(votes[m])
        mass0 += p0
        mass1 += p1
    num = prior.p0 * mass0
    den = num + prior.p1 * mass1
    if den == 0.0:
        raise ImpossibleObservationError(
            f"observed pattern {dict(observed)!r} has probability zero under both states"
        )
    return Belief(num / den)


def _tree_errors(models, rule, graph, thresholds: Mapping, prune_terminal=True):
    """Conditional team error probabilities of a partial policy by recursion
    over the pruned history tree."""

    def recurse(history: str):
        state = _state_at(rule, history)
        decision = state.decision
        if decision is not None:
            return (1.0, 0.0) if decision == 1 else (0.0, 1.0)
        agent = len(history)
        pattern = graph.pattern_for(agent, history)
        try:
            threshold = thresholds[(agent, pattern)]
        except KeyError:
            raise PolicyIncompleteError(
                f"no threshold for agent {agent} with observed pattern {pattern!r}"
            ) from None
        errors = models[agent].error_pair(threshold)
        w0_1, w1_1 = recurse(history + "1")
        w0_0, w1_0 = recurse(history + "0")
        w0 = errors.false_alarm * w0_1 + (1.0 - errors.false_alarm) * w0_0
        w1 = (1.0 - errors.missed_detection) * w1_1 + errors.missed_detection * w1_0
        return w0, w1

    return recurse("")


def partial_bayes_risk(
    prior: Prior,
    costs: CostModel,
    models: Sequence[SignalModel],
    policy: PartialPolicy,
) -> RiskReport:
    """Exact risk of a partial-visibility policy."""
    models = tuple(models)
    if len(models) != policy.rule.team_size:
        raise ValueError(f"got {len(models)} models for a team of {policy.rule.team_size}")
    w0, w1 = _tree_errors(models, policy.rule, policy.graph, policy.thresholds)
    team = ErrorPair(min(1.0, max(0.0, w0)), min(1.0, max(0.0, w1)))
    return RiskReport(bayes_risk(prior, costs, team), team, policy)


def _sweep_agent(prior, costs, models, rule, graph, thresholds, agent):
    """One exact best-response update of every information set of one agent.

    A single tree traversal accumulates, per observed pattern, the pivotal
    weights A (extra false-alarm cost of voting 1) and B (extra miss cost of
    voting 0) over all non-terminal histories sharing that pattern, then the
    scalar subproblem is solved in closed form.
    """
    acc: dict[Pattern, list[float]] = {}

    def recurse(history: str, a0: float, a1: float):
        state = _state_at(rule, history)
        decision = state.decision
        if decision is not None:
            return (1.0, 0.0) if decision == 1 else (0.0, 1.0)
        n = len(history)
        pattern = graph.pattern_for(n, history)
        errors = models[n].error_pair(thresholds[(n, pattern)])
        w0_1, w1_1 = recurse(history + "1", a0 * errors.false_alarm, a1 * (1.0 - errors.missed_detection))
        w0_0, w1_0 = recurse(history + "0", a0 * (1.0 - errors.false_alarm), a1 * errors.missed_detection)
        if n == agent:
            bucket = acc.setdefault(pattern, [0.0, 0.0])
            bucket[0] += a0 * (w0_1 - w0_0)
            bucket[1] += a1 * (w1_0 - w1_1)
        w0 = errors.false_alarm * w0_1 + (1.0 - errors.false_alarm) * w0_0
        w1 = (1.0 - errors.missed_detection) * w1_1 + errors.missed_detection * w1_0
        return w0, w1

    recurse("", 1.0, 1.0)

    max_delta = 0.0
    worst_pattern = None
    for pattern, (raw_a, raw_b) in acc.items():
        a = costs.false_alarm * prior.p0 * raw_a
        b = costs.missed_detection * prior.p1 * raw_b
        new = optimal_vote_threshold(models[agent], a, b)
        key = (agent, pattern)
        if new is None:
            continue
        delta = _move_size(models[agent], thresholds[key], new)
        if delta > max_delta:
            max_delta = delta
            worst_pattern = pattern
        thresholds[key] = new
    return max_delta, worst_pattern


def _all_info_sets(graph: ObservationGraph):
    for agent, obs in enumerate(graph.observed):
        for bits in itertools.product((0, 1), repeat=len(obs)):
            yield agent, bits


def optimal_partial_policy(
    prior: Prior,
    costs: CostModel,
    models: Sequence[SignalModel],
    rule: FusionRule,
    graph: ObservationGraph,
    *,
    ordering: tuple[int, ...] | None = None,
    max_sweeps: int = MAX_SWEEPS,
    step_tol: float = STEP_TOL,
    extra_starts: int = 0,
) -> tuple[PartialPolicy, RiskReport]:
    """Person-by-person optimal thresholds per observable information set.

    Sweeps agents in acting order with exact scalar updates and re-sweeps
    until no threshold moves; runs from the same deterministic multistart
    family as the public optimizer (secret solution, quantile vectors, and
    per-agent muted/forced variants for heterogeneous teams) and keeps the
    lowest-risk candidate.  ``extra_starts`` adds reproducible pseudo-random
    start vectors, as in the public optimizer.
    """
    prior.require_interior()
    models = tuple(models)
    if len(models) != rule.team_size:
        raise ValueError(f"got {len(models)} models for a team of {rule.team_size}")
    if graph.n_agents != rule.team_size:
        raise ValueError(
            f"graph covers {graph.n_agents} agents for a team of {rule.team_size}"
        )

    secret = optimal_secret_thresholds(prior, costs, models, rule)

    def constant(values) -> dict:
        return {key: values[key[0]] for key in _all_info_sets(graph)}

    starts = [constant(secret.thresholds)]
    for q in START_QUANTILES:
        starts.append(constant([_quantile_start(m, q) for m in models]))
    if len(set(models)) > 1:
        for agent in range(rule.team_size):
            for sentinel in (math.inf, -math.inf):
                variant = list(secret.thresholds)
                variant[agent] = sentinel
                starts.append(constant(variant))
    if extra_starts:
        rng = np.random.default_rng(0x5EED)
        intervals = [m.default_threshold_interval() for m in models]
        for _ in range(extra_starts):
            starts.append(
                {key: float(rng.uniform(*intervals[key[0]])) for key in _all_info_sets(graph)}
            )

    best = None
    best_risk = math.inf
    failure = None
    failed_at = None
    for start in starts:
        thresholds = dict(start)
        converged = False
        worst = None
        for _ in range(max_sweeps):
            max_delta = 0.0
            for agent in range(rule.team_size):
                delta, pattern = _sweep_agent(
                    prior, costs, models, rule, graph, thresholds, agent
                )
                if delta > max_delta:
                    max_delta = delta
                    worst = (agent, pattern)
            if max_delta < step_tol:
                converged = True
                break
        if not converged:
            failure = thresholds
            failed_at = worst
            continue
        w0, w1 = _tree_errors(models, rule, graph, thresholds)
        risk = bayes_risk(prior, costs, ErrorPair(w0, w1))
        if risk < best_risk:
            best_risk = risk
            best = thresholds
    if best is None:
        raise SolverError(
            f"partial-policy sweeps did not converge (last moving information set {failed_at!r})",
            best=failure,
        )
    policy = PartialPolicy(rule, graph, best, ordering)
    return policy, partial_bayes_risk(prior, costs, models, policy)
