"""Optimal decision thresholds when no agent sees any other agent's vote.

Secret voting makes every agent's problem a weighted trade between her own
false-alarm and missed-detection probabilities: holding the rest of the team
fixed, agent n's vote changes the team decision only when the others split
exactly L-1 ones to N-L zeros, so her best response is a plain likelihood
ratio test whose target folds in the prior, the costs, and the probability
of that pivotal split under each state.

Two solvers live here.  ``optimal_identical_threshold`` handles the
identically-distributed case by searching the common threshold directly
(grid bracket, scalar minimization, then a root polish on the stationarity
condition, since the common-threshold risk is not guaranteed unimodal).
``optimal_secret_thresholds`` handles heterogeneous teams by multistart
coordinate descent where each scalar subproblem is solved exactly through
the inverse likelihood ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .core import (
    CostModel,
    ErrorPair,
    FusionRule,
    Prior,
    SignalModel,
    SolverError,
    bayes_risk,
    team_error_pair,
    vote_count_pmf,
)

__all__ = [
    "SecretSolution",
    "optimal_identical_threshold",
    "optimal_secret_thresholds",
    "optimal_vote_threshold",
    "identical_threshold_residual",
]

START_QUANTILES = (0.1, 0.3, 0.5, 0.7, 0.9)
MAX_SWEEPS = 200
STEP_TOL = 1e-9
GRID_POINTS = 513


@dataclass(frozen=True)
class SecretSolution:
    """Converged secret-voting thresholds with their achieved risk.

    ``fixed_point_residuals`` holds, per agent, the relative mismatch between
    the likelihood ratio at her threshold and the pivotal-split target it
    must equal at a person-by-person optimum (0.0 for infinite or irrelevant
    thresholds, where the condition is vacuous).
    """

    thresholds: tuple[float, ...]
    risk: float
    team_errors: ErrorPair
    fixed_point_residuals: tuple[float, ...]


def optimal_vote_threshold(model: SignalModel, false_alarm_weight: float, missed_weight: float):
    """Exact minimizer of A*P{vote 1 | state 0} + B*P{vote 0 | state 1}.

    The derivative in the threshold is proportional to B*LR(t) - A, so for
    positive weights the unique minimum sits at LR(t) = A/B.  Non-positive
    weights push the optimum to an infinite threshold; if the vote is fully
    irrelevant (A == B == 0 or two equal endpoint values) returns None.
    """
    a, b = false_alarm_weight, missed_weight
    if a <= 0.0 and b <= 0.0:
        if a == b:
            return None
        return -math.inf if a < b else math.inf
    if a <= 0.0:
        return -math.inf
    if b <= 0.0:
        return math.inf
    return model.threshold_for_lr_target(a / b)


def _quantile_start(model: SignalModel, q: float) -> float:
    """Deterministic start point: the q-quantile of the log-LR range over the
    model's default threshold interval."""
    lo, hi = model.default_threshold_interval()
    llo = model.log_likelihood_ratio(lo)
    lhi = model.log_likelihood_ratio(hi)
    return model.threshold_for_lr_target(math.exp(llo + q * (lhi - llo)))


def _threshold_delta(a: float, b: float) -> float:
    if a == b:
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return math.inf
    return abs(a - b)


def _move_size(model, old: float, new: float) -> float:
    """Size of a best-response move for convergence purposes.

    Finite-to-finite moves are measured in threshold space.  Moves involving
    an infinite threshold are measured by how far the error pair actually
    moved: at a support edge or saturated tail, a hop between an infinite and
    a finite threshold can be a pure floating-point plateau artifact whose
    operating point barely changes, and treating it as an infinite step
    would keep best-response sweeps from ever reporting convergence.
    """
    if old == new:
        return 0.0
    if math.isfinite(old) and math.isfinite(new):
        return abs(old - new)
    e_old = model.error_pair(old)
    e_new = model.error_pair(new)
    return max(
        abs(e_old.false_alarm - e_new.false_alarm),
        abs(e_old.missed_detection - e_new.missed_detection),
    )


def _team_risk(prior, costs, models, thresholds, rule) -> tuple[float, ErrorPair]:
    errors = [m.error_pair(t) for m, t in zip(models, thresholds)]
    team = team_error_pair(errors, rule.votes_needed)
    return bayes_risk(prior, costs, team), team


def _log_pivot_target(prior, costs, rule, log_components) -> float:
    """Log of the LR value a common threshold must hit at stationarity.

    With every teammate at the same threshold, an agent is pivotal when the
    other N-1 votes split L-1 ones to N-L zeros; the target is the cost- and
    prior-weighted ratio of that split's probability under the two states.
    Works in log space so the condition stays exact even where a probability
    rounds to 0 or 1 in double precision.
    """
    n, k = rule.team_size, rule.votes_needed
    log_fa, log_1m_fa, log_md, log_1m_md = log_components

    def term(exponent: int, log_value: float) -> float:
        return 0.0 if exponent == 0 else exponent * log_value

    num = (
        math.log(costs.false_alarm * prior.p0)
        + term(k - 1, log_fa)
        + term(n - k, log_1m_fa)
    )
    den = (
        math.log(costs.missed_detection * prior.p1)
        + term(n - k, log_md)
        + term(k - 1, log_1m_md)
    )
    if math.isinf(num) and math.isinf(den):
        return math.nan
    return num - den


def identical_threshold_residual(
    prior: Prior, costs: CostModel, model: SignalModel, rule: FusionRule, threshold: float
) -> float:
    """Relative residual |LR(t)/target - 1| of the common-threshold
    stationarity condition; 0 for infinite-threshold solutions where the
    condition is vacuous."""
    if math.isinf(threshold):
        return 0.0
    target = _log_pivot_target(prior, costs, rule, model.log_error_components(threshold))
    if math.isnan(target) or math.isinf(target):
        return math.nan
    return abs(math.expm1(model.log_likelihood_ratio(threshold) - target))


def optimal_identical_threshold(
    prior: Prior,
    costs: CostModel,
    model: SignalModel,
    rule: FusionRule,
    *,
    grid_points: int = GRID_POINTS,
) -> SecretSolution:
    """Best common threshold for a team of identically distributed agents.

    Bracket the global minimum on a coarse grid, refine with bounded scalar
    minimization, then polish by root-finding the stationarity condition so
    the fixed-point residual reaches solver precision.
    """
    prior.require_interior()
    n = rule.team_size

    def risk_at(lam: float) -> float:
        e = model.error_pair(lam)
        team = team_error_pair([e] * n, rule.votes_needed)
        return bayes_risk(prior, costs, team)

    lo, hi = model.default_threshold_interval()
    anchor = model.threshold_for_lr_target(
        costs.false_alarm * prior.p0 / (costs.missed_detection * prior.p1)
    )
    if math.isfinite(anchor):
        lo = min(lo, anchor - 4.0 * model.scale)
        hi = max(hi, anchor + 4.0 * model.scale)
    lo = max(lo, model.support[0])

    xs = np.linspace(lo, hi, grid_points)
    risks = np.array([risk_at(x) for x in xs])
    i = int(np.argmin(risks))
    left = xs[max(i - 1, 0)]
    right = xs[min(i + 1, grid_points - 1)]
    res = optimize.minimize_scalar(
        risk_at, bounds=(left, right), method="bounded", options={"xatol": 1e-12}
    )
    best = float(res.x)

    def stationarity(lam: float) -> float:
        target = _log_pivot_target(prior, costs, rule, model.log_error_components(lam))
        if math.isnan(target):
            return math.nan
        return model.log_likelihood_ratio(lam) - target

    # Root-polish the stationarity condition inside the basin of the grid
    # minimum.  The risk can be flat to double precision over long threshold
    # stretches (saturated error probabilities), where the bounded minimizer
    # parks at an arbitrary plateau point; the log-space root still
    # identifies the exact stationary threshold there.
    signs = np.array([stationarity(x) for x in xs])
    brackets = [
        j
        for j in range(grid_points - 1)
        if math.isfinite(signs[j])
        and math.isfinite(signs[j + 1])
        and signs[j] < 0.0 <= signs[j + 1]
    ]
    if brackets:
        j = min(brackets, key=lambda j: abs(j - i))
        polished = float(
            optimize.brentq(stationarity, xs[j], xs[j + 1], xtol=1e-14, rtol=8.9e-16)
        )
        bounded_risk = risk_at(best)
        if risk_at(polished) <= bounded_risk + 1e-12 * max(bounded_risk, 1e-30):
            best = polished

    # An infinite threshold (the team votes as a block) can only win in
    # degenerate setups, but compare to stay honest.
    interior_risk = risk_at(best)
    for sentinel in (-math.inf, math.inf):
        if risk_at(sentinel) < interior_risk:
            best = sentinel
            interior_risk = risk_at(sentinel)

    thresholds = (best,) * n
    risk, team = _team_risk(prior, costs, [model] * n, thresholds, rule)
    residual = identical_threshold_residual(prior, costs, model, rule, best)
    if math.isnan(residual):
        residual = 0.0
    return SecretSolution(thresholds, risk, team, (residual,) * n)


def _pivot_weights(prior, costs, errors: list[ErrorPair], rule, agent: int) -> tuple[float, float]:
    """Cost-weighted probability that the given agent's vote is pivotal,
    under each state, with all other agents at their current thresholds."""
    others = [e for i, e in enumerate(errors) if i != agent]
    pmf0 = vote_count_pmf([e.false_alarm for e in others])
    pmf1 = vote_count_pmf([1.0 - e.missed_detection for e in others])
    k = rule.votes_needed
    a = costs.false_alarm * prior.p0 * float(pmf0[k - 1])
    b = costs.missed_detection * prior.p1 * float(pmf1[k - 1])
    return a, b


def _coordinate_descent(
    prior, costs, models, rule, start: Sequence[float], max_sweeps: int, step_tol: float
):
    thresholds = list(start)
    n = rule.team_size
    for _ in range(max_sweeps):
        max_delta = 0.0
        errors = [m.error_pair(t) for m, t in zip(models, thresholds)]
        for i in range(n):
            a, b = _pivot_weights(prior, costs, errors, rule, i)
            new = optimal_vote_threshold(models[i], a, b)
            if new is None:
                continue
            max_delta = max(max_delta, _move_size(models[i], thresholds[i], new))
            thresholds[i] = new
            errors[i] = models[i].error_pair(new)
        if max_delta < step_tol:
            return tuple(thresholds), True
    return tuple(thresholds), False


def _start_vectors(
    models: tuple, base: Sequence[float], extra_starts: int = 0
) -> list[list[float]]:
    """Deterministic multistart family: the five log-LR quantile vectors plus,
    for heterogeneous teams, per-agent variants of the base vector with that
    one agent muted (never votes 1) or forced (always votes 1).  The
    muted/forced variants reach optima whose basins the constant starts miss,
    such as solutions that silence one agent.  ``extra_starts`` appends that
    many reproducible pseudo-random vectors."""
    starts = [[_quantile_start(m, q) for m in models] for q in START_QUANTILES]
    if len(set(models)) > 1:
        for i in range(len(models)):
            for sentinel in (math.inf, -math.inf):
                variant = list(base)
                variant[i] = sentinel
                starts.append(variant)
    if extra_starts:
        rng = np.random.default_rng(0x5EED)
        intervals = [m.default_threshold_interval() for m in models]
        for _ in range(extra_starts):
            starts.append([float(rng.uniform(*iv)) for iv in intervals])
    return starts


def _secret_residuals(prior, costs, models, thresholds, rule) -> tuple[float, ...]:
    errors = [m.error_pair(t) for m, t in zip(models, thresholds)]
    out = []
    for i, (model, t) in enumerate(zip(models, thresholds)):
        if math.isinf(t):
            out.append(0.0)
            continue
        a, b = _pivot_weights(prior, costs, errors, rule, i)
        if a <= 0.0 or b <= 0.0:
            out.append(0.0)
            continue
        out.append(abs(model.likelihood_ratio(t) * b / a - 1.0))
    return tuple(out)


def optimal_secret_thresholds(
    prior: Prior,
    costs: CostModel,
    models: Sequence[SignalModel],
    rule: FusionRule,
    *,
    max_sweeps: int = MAX_SWEEPS,
    step_tol: float = STEP_TOL,
    extra_starts: int = 0,
) -> SecretSolution:
    """Person-by-person optimal thresholds for a possibly heterogeneous team.

    Coordinate descent with exact scalar updates, run from a deterministic
    multistart family (five log-LR quantile vectors plus, for heterogeneous
    teams, per-agent muted and forced variants); candidates are merged by
    minimum risk with ties going to the lowest start index.  Person-by-person
    optimality is necessary, not sufficient, hence the multistart;
    ``extra_starts`` adds reproducible pseudo-random vectors when deeper
    saturation patterns are suspected.
    """
    prior.require_interior()
    models = tuple(models)
    if len(models) != rule.team_size:
        raise ValueError(
            f"got {len(models)} models for a team of {rule.team_size}"
        )

    base = [_quantile_start(m, 0.5) for m in models]
    best = None
    best_risk = math.inf
    last_iterate = None
    for start in _start_vectors(models, base, extra_starts):
        thresholds, converged = _coordinate_descent(
            prior, costs, models, rule, start, max_sweeps, step_tol
        )
        last_iterate = thresholds
        if not converged:
            continue
        risk, team = _team_risk(prior, costs, models, thresholds, rule)
        if risk < best_risk:
            best_risk = risk
            best = (thresholds, risk, team)
    if best is None:
        raise SolverError(
            f"coordinate descent did not converge within {max_sweeps} sweeps",
            best=last_iterate,
        )
    thresholds, risk, team = best
    residuals = _secret_residuals(prior, costs, models, thresholds, rule)
    return SecretSolution(thresholds, risk, team, residuals)
