"""Reversed-ROC sweeps, acting-order search, and unanimity-rule checks.

With heterogeneous agents the acting order matters, so these tools sweep a
weighted error objective to trace the lower boundary of achievable team
(Type I, Type II) error pairs, enumerate acting orders up to provable
equivalences, and verify the special behavior of unanimity rules (OR and
AND), where visibility and ordering provably change nothing.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import CostModel, ErrorPair, FusionRule, Prior, RiskReport, SignalModel
from .partial import ObservationGraph, optimal_partial_policy
from .public import optimal_public_policy
from .secret import (
    _threshold_delta,
    optimal_identical_threshold,
    optimal_secret_thresholds,
)

__all__ = [
    "RocPoint",
    "RocCurve",
    "reversed_roc",
    "best_ordering",
    "BestOrderingResult",
    "unanimity_check",
    "UnanimityReport",
    "default_sweep_weights",
    "agent_informativeness",
]

MAX_SEARCH_TEAM = 8
PARETO_TOL = 1e-12


def default_sweep_weights(count: int = 41, lo: float = 1e-3, hi: float = 1e3) -> tuple[float, ...]:
    """Log-spaced sweep weights covering both error-trade extremes."""
    return tuple(float(w) for w in np.geomspace(lo, hi, count))


@dataclass(frozen=True)
class RocPoint:
    """One sweep evaluation: the weight, the achieved team errors, and the
    achieved weighted objective weight*pe1 + pe2."""

    weight: float
    team_errors: ErrorPair
    risk: float


@dataclass(frozen=True)
class RocCurve:
    """Lower boundary of achievable team error pairs for one voting mode.

    ``points`` is Pareto-pruned and sorted by team false alarm ascending;
    ``sweep`` keeps every successful evaluation in weight order (each sweep
    optimum is already Pareto-optimal, so pruning only drops ties), and
    ``failures`` records any weights whose optimization failed.
    """

    mode: str
    ordering: tuple[int, ...]
    points: tuple[RocPoint, ...]
    sweep: tuple[RocPoint, ...]
    failures: tuple[tuple[float, str], ...] = ()


def _pareto_prune(points: Sequence[RocPoint]) -> tuple[RocPoint, ...]:
    ordered = sorted(points, key=lambda p: (p.team_errors.false_alarm, p.team_errors.missed_detection))
    kept: list[RocPoint] = []
    best_md = math.inf
    for p in ordered:
        if p.team_errors.missed_detection < best_md - PARETO_TOL:
            kept.append(p)
            best_md = p.team_errors.missed_detection
    return tuple(kept)


def _weight_scenario(weight: float) -> tuple[Prior, CostModel]:
    """Prior and costs that make the Bayes risk equal weight*pe1 + pe2."""
    return Prior(0.5), CostModel(2.0 * weight, 2.0)


def _optimize_mode(
    mode: str,
    prior: Prior,
    costs: CostModel,
    models: Sequence[SignalModel],
    rule: FusionRule,
    graph: ObservationGraph | None,
) -> RiskReport:
    if mode == "secret":
        solution = optimal_secret_thresholds(prior, costs, models, rule)
        return RiskReport(solution.risk, solution.team_errors, solution.thresholds)
    if mode == "public":
        _, report = optimal_public_policy(prior, costs, models, rule)
        return report
    if mode == "partial":
        if graph is None:
            raise ValueError("partial mode needs an observation graph")
        _, report = optimal_partial_policy(prior, costs, models, rule, graph)
        return report
    raise ValueError(f"unknown voting mode {mode!r}")


def reversed_roc(
    models: Sequence[SignalModel],
    rule: FusionRule,
    mode: str,
    *,
    ordering: Sequence[int] | None = None,
    graph: ObservationGraph | None = None,
    weights: Sequence[float] | None = None,
    jobs: int = 1,
) -> RocCurve:
    """Sweep the weighted objective weight*pe1 + pe2 and record the achieved
    team error pair at each weight.

    ``ordering`` permutes the agents into acting order for the sequential
    modes.  A failed weight is skipped and reported; the curve is still
    returned.
    """
    models = tuple(models)
    n = rule.team_size
    if len(models) != n:
        raise ValueError(f"got {len(models)} models for a team of {n}")
    order = tuple(ordering) if ordering is not None else tuple(range(n))
    if sorted(order) != list(range(n)):
        raise ValueError(f"ordering {order!r} is not a permutation of 0..{n - 1}")
    if weights is None:
        weights = default_sweep_weights()
    if len(weights) == 0:
        raise ValueError("weights must be nonempty")
    acting = tuple(models[i] for i in order)

    def evaluate(weight: float):
        if not weight > 0.0:
            raise ValueError(f"sweep weights must be positive, got {weight!r}")
        prior, costs = _weight_scenario(weight)
        report = _optimize_mode(mode, prior, costs, acting, rule, graph)
        errors = report.team_errors
        value = weight * errors.false_alarm + errors.missed_detection
        return RocPoint(weight, errors, value)

    results: list[RocPoint | None] = [None] * len(weights)
    failures: list[tuple[float, str]] = []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(evaluate, w) for w in weights]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except Exception as exc:  # noqa: BLE001 - reported, sweep continues
                    failures.append((float(weights[i]), str(exc)))
    else:
        for i, w in enumerate(weights):
            try:
                results[i] = evaluate(w)
            except Exception as exc:  # noqa: BLE001 - reported, sweep continues
                failures.append((float(w), str(exc)))
    sweep = tuple(p for p in results if p is not None)
    return RocCurve(mode, order, _pareto_prune(sweep), sweep, tuple(failures))


def agent_informativeness(models: Sequence[SignalModel]) -> tuple[float, ...]:
    """Single-agent minimum Bayes risk at an even prior and unit costs.

    A distribution-free stand-in for signal quality: lower risk means a more
    informative private signal.  Used to label and rank heterogeneous agents.
    """
    prior, costs = Prior(0.5), CostModel(1.0, 1.0)
    single = FusionRule(1, 1)
    return tuple(
        optimal_identical_threshold(prior, costs, m, single).risk for m in models
    )


def _suffix_exchange_depth(rule: FusionRule) -> int:
    """Smallest depth k at which every reachable non-terminal tally leaves a
    unanimity subproblem, making the acting order of the remaining agents
    provably irrelevant."""
    n, need = rule.team_size, rule.votes_needed
    for k in range(n):
        all_unanimity = True
        for ones in range(0, k + 1):
            sub_need = need - ones
            remaining = n - k
            if not 1 <= sub_need <= remaining:
                continue  # terminal tally
            if sub_need != 1 and sub_need != remaining:
                all_unanimity = False
                break
        if all_unanimity:
            return k
    return n - 1


def _ordering_representatives(rule: FusionRule) -> list[tuple[int, ...]]:
    n = rule.team_size
    k = _suffix_exchange_depth(rule)
    reps = []
    for prefix in itertools.permutations(range(n), k):
        suffix = tuple(sorted(set(range(n)) - set(prefix)))
        reps.append(prefix + suffix)
    return sorted(set(reps))


@dataclass(frozen=True)
class BestOrderingResult:
    """Winner of the acting-order search with the full ranked list.

    ``ranking`` lists one representative per provable-equivalence class of
    orderings, sorted by achieved risk with lexicographic tie-breaks.
    ``informativeness`` gives each agent's single-agent minimum risk at an
    even prior (lower = stronger signal), for labeling the ranking.
    """

    ordering: tuple[int, ...]
    report: RiskReport
    ranking: tuple[tuple[tuple[int, ...], float], ...]
    informativeness: tuple[float, ...]


def best_ordering(
    prior: Prior,
    costs: CostModel,
    models: Sequence[SignalModel],
    rule: FusionRule,
    *,
    mode: str = "public",
) -> BestOrderingResult:
    """Search acting orders for the lowest public-voting risk.

    Orders are enumerated modulo the two provable symmetries (full exchange
    under unanimity rules; exchange of any suffix whose subproblems are all
    unanimity); everything else is evaluated explicitly.
    """
    if mode != "public":
        raise ValueError("ordering search is defined for public voting")
    models = tuple(models)
    n = rule.team_size
    if len(models) != n:
        raise ValueError(f"got {len(models)} models for a team of {n}")
    if n > MAX_SEARCH_TEAM:
        raise ValueError(
            f"team of {n} is too large for factorial search (max {MAX_SEARCH_TEAM}); "
            "pass an explicit ordering instead"
        )

    ranked: list[tuple[tuple[int, ...], float, RiskReport]] = []
    for order in _ordering_representatives(rule):
        acting = tuple(models[i] for i in order)
        policy, report = optimal_public_policy(prior, costs, acting, rule, ordering=order)
        ranked.append((order, report.risk, report))
    ranked.sort(key=lambda item: (item[1], item[0]))
    winner_order, _, winner_report = ranked[0]
    return BestOrderingResult(
        winner_order,
        winner_report,
        tuple((order, risk) for order, risk, _ in ranked),
        agent_informativeness(models),
    )


@dataclass(frozen=True)
class UnanimityReport:
    """Outcome of the unanimity-rule invariance checks.

    For a unanimity rule (OR or AND) the report verifies that (a) the public
    and secret optima coincide, (b) each agent's threshold is the same in
    every acting position, and (c) each agent's threshold matches her
    history-blind secret value, so observing votes changes nothing.  For any
    other rule only the classification is reported.
    """

    rule: FusionRule
    is_unanimity: bool
    risk_spread: float | None = None
    public_secret_gap: float | None = None
    position_threshold_spread: float | None = None
    history_dependence: float | None = None
    passed: bool | None = None


def _meaningful_chain(rule: FusionRule) -> str:
    """The single live history bit under a unanimity rule: all zeros for OR
    (any 1 settles the outcome), all ones for AND."""
    return "0" if rule.votes_needed == 1 else "1"


def unanimity_check(
    prior: Prior,
    costs: CostModel,
    models: Sequence[SignalModel],
    rule: FusionRule,
    *,
    risk_tol: float = 1e-8,
    threshold_tol: float = 1e-6,
) -> UnanimityReport:
    """Classify the rule and, for unanimity rules, verify order and history
    invariance by optimizing every acting order explicitly."""
    models = tuple(models)
    n = rule.team_size
    if len(models) != n:
        raise ValueError(f"got {len(models)} models for a team of {n}")
    if not rule.is_unanimity:
        return UnanimityReport(rule, False)

    secret = optimal_secret_thresholds(prior, costs, models, rule)
    live_bit = _meaningful_chain(rule)

    risks = []
    per_agent_thresholds: dict[int, list[float]] = {i: [] for i in range(n)}
    history_gap = 0.0
    for order in itertools.permutations(range(n)):
        acting = tuple(models[i] for i in order)
        policy, report = optimal_public_policy(prior, costs, acting, rule, ordering=order)
        risks.append(report.risk)
        for position, agent in enumerate(order):
            live = policy.threshold_at(live_bit * position)
            per_agent_thresholds[agent].append(live)
            history_gap = max(history_gap, _threshold_delta(live, secret.thresholds[agent]))

    risk_spread = max(risks) - min(risks)
    public_secret_gap = max(abs(r - secret.risk) for r in risks)
    position_spread = max(
        max(_threshold_delta(a, b) for a in vals for b in vals)
        for vals in per_agent_thresholds.values()
    )
    passed = (
        risk_spread < risk_tol
        and public_secret_gap < risk_tol
        and position_spread < threshold_tol
        and history_gap < threshold_tol
    )
    return UnanimityReport(
        rule,
        True,
        risk_spread=risk_spread,
        public_secret_gap=public_secret_gap,
        position_threshold_spread=position_spread,
        history_dependence=history_gap,
        passed=passed,
    )
