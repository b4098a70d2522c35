"""Optimal history-dependent policies when every vote is visible downstream.

Agents act in a fixed order and each one sees all precedent votes, so a
policy assigns a threshold to every vote history.  Watching a vote does two
things at once to a later agent's problem: it shifts her belief about the
state (a Bayes update on the voter's error pair), and it evolves the fusion
rule itself, because the running tally changes how many 1-votes the team
still needs from how many remaining agents.  For identically distributed
agents those two effects cancel exactly, which the test suite checks rather
than assumes.

Histories are bit strings in acting order; the empty string is the first
agent's decision point.  Once a history's tally already decides the team
outcome, the remaining agents' votes cannot flip it, so those nodes carry
don't-care thresholds (stored as the sibling node's value, i.e. the same
agent's threshold for the opposite precedent vote) and deeper histories are
excluded from the map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .core import (
    CostModel,
    ErrorPair,
    FusionRule,
    PolicyIncompleteError,
    Prior,
    ImpossibleObservationError,
    RiskReport,
    SignalModel,
    SolverError,
    bayes_risk,
)
from .secret import (
    MAX_SWEEPS,
    START_QUANTILES,
    STEP_TOL,
    _move_size,
    _quantile_start,
    optimal_identical_threshold,
    optimal_secret_thresholds,
    optimal_vote_threshold,
)

__all__ = [
    "Belief",
    "FusionState",
    "VotePolicy",
    "belief_update",
    "history_belief",
    "public_bayes_risk",
    "optimal_public_policy",
    "belief_only_threshold",
    "constant_policy",
]


@dataclass(frozen=True)
class Belief:
    """Posterior probability of state 0 given the votes observed so far."""

    p0: float

    def __post_init__(self):
        if not (0.0 <= self.p0 <= 1.0):
            raise ValueError(f"belief must lie in [0, 1], got {self.p0!r}")

    @property
    def p1(self) -> float:
        return 1.0 - self.p0


def belief_update(belief: Belief, voter_errors: ErrorPair, vote: int) -> Belief:
    """Bayes update of the state-0 belief after observing one vote.

    ``voter_errors`` is the voting agent's error pair at the threshold she
    actually used.  Raises ImpossibleObservationError when the vote has
    probability zero under both states.
    """
    if vote not in (0, 1):
        raise ValueError(f"vote must be 0 or 1, got {vote!r}")
    q0 = belief.p0
    fa, md = voter_errors.false_alarm, voter_errors.missed_detection
    if vote == 0:
        num = q0 * (1.0 - fa)
        den = num + (1.0 - q0) * md
    else:
        num = q0 * fa
        den = num + (1.0 - q0) * (1.0 - md)
    if den == 0.0:
        raise ImpossibleObservationError(
            f"vote {vote} has probability zero under both states"
        )
    return Belief(num / den)


@dataclass(frozen=True)
class FusionState:
    """Votes-for-1 still needed and agents yet to vote, evolving per vote.

    Terminal exactly when ``votes_needed <= 0`` (team decision 1) or
    ``votes_needed > agents_remaining`` (team decision 0).
    """

    votes_needed: int
    agents_remaining: int

    @classmethod
    def initial(cls, rule: FusionRule) -> "FusionState":
        return cls(rule.votes_needed, rule.team_size)

    @property
    def is_terminal(self) -> bool:
        return self.votes_needed <= 0 or self.votes_needed > self.agents_remaining

    @property
    def decision(self) -> int | None:
        """Team decision at a terminal state, else None."""
        if self.votes_needed <= 0:
            return 1
        if self.votes_needed > self.agents_remaining:
            return 0
        return None

    def evolve(self, vote: int) -> "FusionState":
        """State after one more vote: one fewer agent remains, and a 1-vote
        reduces the count still needed."""
        if self.is_terminal:
            raise ValueError("cannot evolve a terminal fusion state")
        if vote not in (0, 1):
            raise ValueError(f"vote must be 0 or 1, got {vote!r}")
        return FusionState(self.votes_needed - vote, self.agents_remaining - 1)


def _state_at(rule: FusionRule, history: str) -> FusionState:
    ones = history.count("1")
    return FusionState(rule.votes_needed - ones, rule.team_size - len(history))


def _policy_nodes(rule: FusionRule) -> tuple[list[list[str]], list[str]]:
    """Histories with a non-terminal prefix, split into the per-depth lists
    of meaningful (non-terminal) nodes and the flat list of don't-care
    (terminal, depth < N) nodes."""
    meaningful: list[list[str]] = [[] for _ in range(rule.team_size)]
    dont_care: list[str] = []

    def visit(history: str) -> None:
        state = _state_at(rule, history)
        if state.is_terminal:
            dont_care.append(history)
            return
        meaningful[len(history)].append(history)
        if len(history) + 1 < rule.team_size:
            visit(history + "0")
            visit(history + "1")

    visit("")
    return meaningful, dont_care


@dataclass(frozen=True)
class VotePolicy:
    """Map from vote histories to decision thresholds for one acting order.

    ``thresholds`` covers every history whose prefix is non-terminal; nodes
    that are themselves terminal hold their sibling's value by convention.
    ``ordering`` records which original agent acts at each position (identity
    when omitted).  The map is wrapped read-only at construction.
    """

    rule: FusionRule
    thresholds: Mapping[str, float]
    ordering: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "thresholds", MappingProxyType(dict(self.thresholds)))
        if "" not in self.thresholds:
            raise ValueError("policy must include the root history ''")
        if self.ordering is not None:
            ordering = tuple(self.ordering)
            if sorted(ordering) != list(range(self.rule.team_size)):
                raise ValueError(f"ordering {ordering!r} is not a permutation")
            object.__setattr__(self, "ordering", ordering)

    def state_at(self, history: str) -> FusionState:
        return _state_at(self.rule, history)

    def threshold_at(self, history: str) -> float:
        try:
            return self.thresholds[history]
        except KeyError:
            raise PolicyIncompleteError(f"no threshold for history {history!r}") from None

    def resolve(self, history: str) -> float:
        """Threshold for any history, walking up to the nearest stored
        ancestor past excluded (post-terminal) nodes."""
        h = history
        while h not in self.thresholds:
            if not h:
                raise PolicyIncompleteError("policy has no root threshold")
            h = h[:-1]
        return self.thresholds[h]

    def is_dont_care(self, history: str) -> bool:
        return self.state_at(history).is_terminal


def constant_policy(
    rule: FusionRule,
    thresholds_by_agent: Sequence[float],
    ordering: tuple[int, ...] | None = None,
) -> VotePolicy:
    """History-independent policy: every node of agent n carries the n-th
    threshold.  Useful for playing a secret-voting solution publicly."""
    if len(thresholds_by_agent) != rule.team_size:
        raise ValueError(
            f"got {len(thresholds_by_agent)} thresholds for a team of {rule.team_size}"
        )
    meaningful, dont_care = _policy_nodes(rule)
    mapping = {h: thresholds_by_agent[d] for d, level in enumerate(meaningful) for h in level}
    for h in dont_care:
        mapping[h] = thresholds_by_agent[len(h)]
    return VotePolicy(rule, mapping, ordering)


def history_belief(
    prior: Prior, models: Sequence[SignalModel], policy: VotePolicy, history: str
) -> Belief:
    """Belief about the state after the given votes, chaining one Bayes
    update per vote at each voter's policy threshold."""
    belief = Belief(prior.p0)
    for depth, vote in enumerate(history):
        errors = models[depth].error_pair(policy.resolve(history[:depth]))
        belief = belief_update(belief, errors, int(vote))
    return belief


def _child_outcome(rule, history, vote, w_table):
    """(w0, w1) of the subtree entered by the vote: conditional probabilities
    of a team false alarm / missed detection given the child is reached."""
    child = history + str(vote)
    state = _state_at(rule, child)
    decision = state.decision
    if decision is not None:
        return (1.0, 0.0) if decision == 1 else (0.0, 1.0)
    return w_table[child]


def _node_w(models, rule, thresholds, history, w_table):
    errors = models[len(history)].error_pair(thresholds[history])
    w0_1, w1_1 = _child_outcome(rule, history, 1, w_table)
    w0_0, w1_0 = _child_outcome(rule, history, 0, w_table)
    w0 = errors.false_alarm * w0_1 + (1.0 - errors.false_alarm) * w0_0
    w1 = (1.0 - errors.missed_detection) * w1_1 + errors.missed_detection * w1_0
    return w0, w1


def _w_tables(models, rule, thresholds, meaningful):
    """Bottom-up pass computing, for every meaningful node, the conditional
    team error probabilities of its subtree under each state."""
    w_table: dict[str, tuple[float, float]] = {}
    for level in reversed(meaningful):
        for history in level:
            w_table[history] = _node_w(models, rule, thresholds, history, w_table)
    return w_table


def _alpha_table(models, rule, thresholds, meaningful):
    """Reach probabilities (given each state) of every meaningful node.

    Valid for a whole deepest-first sweep: a node's reach depends only on
    shallower thresholds, which such a sweep has not yet touched.
    """
    alphas = {"": (1.0, 1.0)}
    for level in meaningful:
        for history in level:
            a0, a1 = alphas[history]
            errors = models[len(history)].error_pair(thresholds[history])
            for vote in (0, 1):
                child = history + str(vote)
                if len(child) >= rule.team_size or _state_at(rule, child).is_terminal:
                    continue
                if vote == 1:
                    alphas[child] = (a0 * errors.false_alarm, a1 * (1.0 - errors.missed_detection))
                else:
                    alphas[child] = (a0 * (1.0 - errors.false_alarm), a1 * errors.missed_detection)
    return alphas


def public_bayes_risk(
    prior: Prior,
    costs: CostModel,
    models: Sequence[SignalModel],
    policy: VotePolicy,
) -> RiskReport:
    """Exact risk of a public-voting policy via recursion over the history
    tree; equals the direct sum over all 2^N vote paths."""
    models = tuple(models)
    rule = policy.rule
    if len(models) != rule.team_size:
        raise ValueError(f"got {len(models)} models for a team of {rule.team_size}")
    meaningful, _ = _policy_nodes(rule)
    thresholds = {h: policy.threshold_at(h) for level in meaningful for h in level}
    w_table = _w_tables(models, rule, thresholds, meaningful)
    w0, w1 = w_table[""]
    team = ErrorPair(min(1.0, max(0.0, w0)), min(1.0, max(0.0, w1)))
    return RiskReport(bayes_risk(prior, costs, team), team, policy)


def _backward_induction(
    prior, costs, models, rule, meaningful, start: dict[str, float], max_sweeps, step_tol
):
    thresholds = dict(start)
    max_depth = max(d for d, level in enumerate(meaningful) if level)
    worst_node = ""
    for _ in range(max_sweeps):
        w_table = _w_tables(models, rule, thresholds, meaningful)
        alphas = _alpha_table(models, rule, thresholds, meaningful)
        max_delta = 0.0
        for depth in range(max_depth, -1, -1):
            for history in meaningful[depth]:
                a0, a1 = alphas[history]
                w0_1, w1_1 = _child_outcome(rule, history, 1, w_table)
                w0_0, w1_0 = _child_outcome(rule, history, 0, w_table)
                a = costs.false_alarm * prior.p0 * a0 * (w0_1 - w0_0)
                b = costs.missed_detection * prior.p1 * a1 * (w1_0 - w1_1)
                new = optimal_vote_threshold(models[depth], a, b)
                if new is None:
                    continue
                delta = _move_size(models[depth], thresholds[history], new)
                if delta > max_delta:
                    max_delta = delta
                    worst_node = history
                thresholds[history] = new
            for history in meaningful[depth]:
                w_table[history] = _node_w(models, rule, thresholds, history, w_table)
        if max_delta < step_tol:
            return thresholds, True, worst_node
    return thresholds, False, worst_node


def _sibling(history: str) -> str:
    return history[:-1] + ("1" if history[-1] == "0" else "0")


def optimal_public_policy(
    prior: Prior,
    costs: CostModel,
    models: Sequence[SignalModel],
    rule: FusionRule,
    *,
    ordering: tuple[int, ...] | None = None,
    max_sweeps: int = MAX_SWEEPS,
    step_tol: float = STEP_TOL,
    extra_starts: int = 0,
) -> tuple[VotePolicy, RiskReport]:
    """Person-by-person optimal thresholds at every reachable history.

    Backward induction (deepest nodes first) with forward re-sweeps until no
    threshold moves; each node update is the exact scalar best response given
    the rest of the policy, so the risk never increases.  Runs from a
    deterministic multistart family and keeps the lowest-risk converged
    candidate: the secret-voting solution (which guarantees the public
    optimum never falls behind the secret one), the five quantile vectors,
    and, for heterogeneous teams, per-agent muted/forced variants whose
    basins cover solutions that saturate one agent.  Convergence is to a
    person-by-person optimum, not a proven global one; ``extra_starts`` adds
    that many reproducible pseudo-random start vectors for problems where
    deeper saturation patterns are suspected.
    """
    prior.require_interior()
    models = tuple(models)
    if len(models) != rule.team_size:
        raise ValueError(f"got {len(models)} models for a team of {rule.team_size}")
    meaningful, dont_care = _policy_nodes(rule)

    secret = optimal_secret_thresholds(prior, costs, models, rule)

    def constant(values) -> dict[str, float]:
        return {h: values[d] for d, level in enumerate(meaningful) for h in level}

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
                {
                    h: float(rng.uniform(*intervals[d]))
                    for d, level in enumerate(meaningful)
                    for h in level
                }
            )

    best = None
    best_risk = math.inf
    failure = None
    failed_node = ""
    for start in starts:
        thresholds, converged, worst_node = _backward_induction(
            prior, costs, models, rule, meaningful, start, max_sweeps, step_tol
        )
        if not converged:
            failure = thresholds
            failed_node = worst_node
            continue
        w_table = _w_tables(models, rule, thresholds, meaningful)
        w0, w1 = w_table[""]
        risk = bayes_risk(prior, costs, ErrorPair(w0, w1))
        if risk < best_risk:
            best_risk = risk
            best = thresholds
    if best is None:
        raise SolverError(
            f"public-policy sweeps did not converge (last moving history {failed_node!r})",
            best=failure,
        )

    mapping = dict(best)
    for history in dont_care:
        mapping[history] = mapping[_sibling(history)]
    policy = VotePolicy(rule, mapping, ordering)
    return policy, public_bayes_risk(prior, costs, models, policy)


def belief_only_threshold(
    belief: Belief, costs: CostModel, model: SignalModel, rule: FusionRule
) -> float:
    """Best common threshold for a fresh team holding the updated belief but
    the original, un-evolved fusion rule.

    This isolates the belief-update half of social learning: it is what an
    agent would use if she treated the observed votes purely as evidence
    about the state and ignored that the tally has already changed how many
    votes the team still needs.
    """
    solution = optimal_identical_threshold(Prior(belief.p0), costs, model, rule)
    return solution.thresholds[0]
