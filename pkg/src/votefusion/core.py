"""Core types and exact probability computations for L-out-of-N vote fusion.

A team of agents votes 0 or 1 on a hidden binary state; the team decides 1
exactly when at least L of the N votes are 1.  This module holds the scalar
building blocks everything else is assembled from: signal models with
strictly monotone likelihood ratios, per-agent error pairs induced by a
threshold vote, exact Poisson-binomial team error probabilities, and the
expected decision cost.

All types are immutable after construction and all functions are pure, so
values can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import ndtri

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
    "gaussian_cdf",
    "gaussian_tail",
    "log_gaussian_tail",
    "vote_count_pmf",
    "team_error_pair",
    "bayes_risk",
]

_SQRT2 = math.sqrt(2.0)


class SolverError(RuntimeError):
    """An optimization failed to converge.  Carries the best iterate found."""

    def __init__(self, message: str, *, best=None):
        super().__init__(message)
        self.best = best


class ImpossibleObservationError(ValueError):
    """An observed vote pattern has probability zero under both states."""


class PolicyIncompleteError(LookupError):
    """A reachable decision point has no threshold in the policy."""


def gaussian_cdf(x: float) -> float:
    """Standard normal CDF, computed through erfc so both tails keep full
    relative accuracy (absolute error below 1e-15)."""
    return 0.5 * math.erfc(-x / _SQRT2)


def gaussian_tail(x: float) -> float:
    """Standard normal upper tail probability P{Z > x}."""
    return 0.5 * math.erfc(x / _SQRT2)


def log_gaussian_tail(x: float) -> float:
    """log P{Z > x} with full relative accuracy far into the tail.

    Direct erfc keeps ~1e-16 relative error until it underflows (x ~ 38);
    past that an asymptotic expansion takes over so the logarithm stays
    finite and smooth wherever the tail is representable at all.
    """
    tail = gaussian_tail(x)
    if tail > 0.0:
        return math.log(tail)
    # Q(x) ~ phi(x)/x * (1 - 1/x^2 + 3/x^4) for large x
    x2 = x * x
    return (
        -0.5 * x2
        - 0.5 * math.log(2.0 * math.pi)
        - math.log(x)
        + math.log1p(-1.0 / x2 + 3.0 / (x2 * x2))
    )


@dataclass(frozen=True)
class Prior:
    """Distribution of the hidden state: ``p0`` is the probability of state 0."""

    p0: float

    def __post_init__(self):
        if not (0.0 <= self.p0 <= 1.0):
            raise ValueError(f"p0 must lie in [0, 1], got {self.p0!r}")

    @property
    def p1(self) -> float:
        return 1.0 - self.p0

    def require_interior(self) -> None:
        """Optimization entry points reject degenerate priors."""
        if not 0.0 < self.p0 < 1.0:
            raise ValueError(
                f"degenerate prior p0={self.p0}: optimization needs p0 in (0, 1)"
            )


@dataclass(frozen=True)
class CostModel:
    """Positive costs of the two error kinds; correct decisions cost zero.

    ``false_alarm`` is charged for deciding 1 when the state is 0,
    ``missed_detection`` for deciding 0 when the state is 1.
    """

    false_alarm: float = 1.0
    missed_detection: float = 1.0

    def __post_init__(self):
        for name in ("false_alarm", "missed_detection"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} cost must be a positive finite real, got {value!r}")


@dataclass(frozen=True)
class ErrorPair:
    """A (Type I, Type II) probability pair for a single vote or for the team.

    ``false_alarm`` is P{vote 1 | state 0}; ``missed_detection`` is
    P{vote 0 | state 1}.
    """

    false_alarm: float
    missed_detection: float

    def __post_init__(self):
        for name in ("false_alarm", "missed_detection"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class FusionRule:
    """The team decides 1 iff at least ``votes_needed`` of ``team_size`` votes are 1."""

    votes_needed: int
    team_size: int

    def __post_init__(self):
        if self.team_size < 1:
            raise ValueError(f"team_size must be >= 1, got {self.team_size}")
        if not 1 <= self.votes_needed <= self.team_size:
            raise ValueError(
                f"votes_needed must lie in 1..{self.team_size}, got {self.votes_needed}"
            )

    @property
    def is_unanimity(self) -> bool:
        """True for the OR (1-of-N) and AND (N-of-N) rules, where one team
        outcome requires every agent to agree."""
        return self.votes_needed == 1 or self.votes_needed == self.team_size


@dataclass(frozen=True)
class RiskReport:
    """Achieved expected cost with the team errors and thresholds behind it.

    ``thresholds`` is either a per-agent tuple (secret voting) or a policy
    object (public / partial voting).
    """

    risk: float
    team_errors: ErrorPair
    thresholds: object


@dataclass(frozen=True)
class GaussianModel:
    """Signal = state + zero-mean Gaussian noise with the given variance.

    The likelihood ratio of state 1 to state 0 is exp((2y - 1) / (2 var)),
    strictly increasing over the whole real line.
    """

    variance: float = 1.0

    def __post_init__(self):
        if not (self.variance > 0.0 and math.isfinite(self.variance)):
            raise ValueError(f"variance must be a positive finite real, got {self.variance!r}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    @property
    def scale(self) -> float:
        """Characteristic signal scale, used to size search intervals."""
        return self.sigma

    @property
    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    @property
    def lr_range(self) -> tuple[float, float]:
        return (0.0, math.inf)

    def log_likelihood_ratio(self, y: float) -> float:
        if math.isnan(y):
            raise ValueError("signal value is NaN")
        return (2.0 * y - 1.0) / (2.0 * self.variance)

    def likelihood_ratio(self, y: float) -> float:
        return math.exp(self.log_likelihood_ratio(y))

    def invert_likelihood_ratio(self, target: float) -> float:
        """Signal value at which the likelihood ratio equals ``target``."""
        if not (target > 0.0 and math.isfinite(target)):
            raise ValueError(f"likelihood-ratio target must be in (0, inf), got {target!r}")
        return self.variance * math.log(target) + 0.5

    def threshold_for_lr_target(self, target: float) -> float:
        """Total variant of :meth:`invert_likelihood_ratio`: targets at or
        beyond the attainable range map to the matching infinite threshold."""
        if target <= 0.0:
            return -math.inf
        if math.isinf(target):
            return math.inf
        return self.invert_likelihood_ratio(target)

    def error_pair(self, threshold: float) -> ErrorPair:
        """Error probabilities of the vote 1{y >= threshold}."""
        if math.isnan(threshold):
            raise ValueError("threshold is NaN")
        if threshold == math.inf:
            return ErrorPair(0.0, 1.0)
        if threshold == -math.inf:
            return ErrorPair(1.0, 0.0)
        fa = gaussian_tail(threshold / self.sigma)
        md = gaussian_cdf((threshold - 1.0) / self.sigma)
        return ErrorPair(fa, md)

    def log_error_components(self, threshold: float) -> tuple[float, float, float, float]:
        """(log fa, log(1-fa), log md, log(1-md)) at full relative accuracy.

        Needed where a probability rounds to exactly 0 or 1 in double
        precision but its logarithm still carries information.
        """
        if threshold == math.inf:
            return (-math.inf, 0.0, 0.0, -math.inf)
        if threshold == -math.inf:
            return (0.0, -math.inf, -math.inf, 0.0)
        x0 = threshold / self.sigma
        x1 = (threshold - 1.0) / self.sigma
        return (
            log_gaussian_tail(x0),
            log_gaussian_tail(-x0),
            log_gaussian_tail(-x1),
            log_gaussian_tail(x1),
        )

    def quantile(self, u, state):
        """Inverse CDF of the signal under the given state; vectorized."""
        return np.asarray(state, dtype=float) + self.sigma * ndtri(u)

    def default_threshold_interval(self) -> tuple[float, float]:
        span = 7.5 * self.sigma
        return (-span, 1.0 + span)


@dataclass(frozen=True)
class ExponentialModel:
    """Exponential signal whose decay rate depends on the state.

    Under state h the signal density on [0, inf) is rate_h * exp(-rate_h*y)
    with ``rate0 > rate1``, so state 1 stretches the signal toward larger
    values and the likelihood ratio (rate1/rate0) * exp((rate0-rate1) y) is
    strictly increasing on the shared support.
    """

    rate0: float = 2.0
    rate1: float = 1.0

    def __post_init__(self):
        for name in ("rate0", "rate1"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite real, got {value!r}")
        if not self.rate0 > self.rate1:
            raise ValueError(
                f"rate0 must exceed rate1 so larger signals favor state 1, "
                f"got rate0={self.rate0}, rate1={self.rate1}"
            )

    @property
    def scale(self) -> float:
        return 1.0 / self.rate1

    @property
    def support(self) -> tuple[float, float]:
        return (0.0, math.inf)

    @property
    def lr_range(self) -> tuple[float, float]:
        return (self.rate1 / self.rate0, math.inf)

    def log_likelihood_ratio(self, y: float) -> float:
        if math.isnan(y) or y < 0.0:
            raise ValueError(f"signal {y!r} is outside the support [0, inf)")
        return math.log(self.rate1 / self.rate0) + (self.rate0 - self.rate1) * y

    def likelihood_ratio(self, y: float) -> float:
        return math.exp(self.log_likelihood_ratio(y))

    def invert_likelihood_ratio(self, target: float) -> float:
        lo, _ = self.lr_range
        if not (target >= lo and math.isfinite(target)):
            raise ValueError(
                f"likelihood-ratio target must lie in [{lo}, inf), got {target!r}"
            )
        return math.log(target * self.rate0 / self.rate1) / (self.rate0 - self.rate1)

    def threshold_for_lr_target(self, target: float) -> float:
        lo, _ = self.lr_range
        if target <= lo:
            return -math.inf
        if math.isinf(target):
            return math.inf
        return self.invert_likelihood_ratio(target)

    def error_pair(self, threshold: float) -> ErrorPair:
        if math.isnan(threshold):
            raise ValueError("threshold is NaN")
        if threshold == math.inf:
            return ErrorPair(0.0, 1.0)
        if threshold <= 0.0:
            return ErrorPair(1.0, 0.0)
        fa = math.exp(-self.rate0 * threshold)
        md = -math.expm1(-self.rate1 * threshold)
        return ErrorPair(fa, md)

    def log_error_components(self, threshold: float) -> tuple[float, float, float, float]:
        """(log fa, log(1-fa), log md, log(1-md)) at full relative accuracy."""
        if threshold == math.inf:
            return (-math.inf, 0.0, 0.0, -math.inf)
        if threshold <= 0.0:
            return (0.0, -math.inf, -math.inf, 0.0)

        def log1m_exp(log_p: float) -> float:
            # log(1 - e^log_p) for log_p < 0
            return math.log(-math.expm1(log_p))

        log_fa = -self.rate0 * threshold
        log_1m_md = -self.rate1 * threshold
        return (log_fa, log1m_exp(log_fa), log1m_exp(log_1m_md), log_1m_md)

    def quantile(self, u, state):
        u = np.asarray(u, dtype=float)
        rate = np.where(np.asarray(state) == 0, self.rate0, self.rate1)
        return -np.log1p(-u) / rate

    def default_threshold_interval(self) -> tuple[float, float]:
        # Covers quantiles up to 1 - 1e-12 under the slower-decaying state.
        return (0.0, -math.log(1e-12) / self.rate1)


SignalModel = Union[GaussianModel, ExponentialModel]


def vote_count_pmf(probs: Sequence[float]) -> np.ndarray:
    """Exact pmf of the number of 1-votes among independent Bernoulli votes.

    Iterative convolution of the vote-count distribution: O(N^2) arithmetic,
    exact up to float rounding, no 2^N subset enumeration.
    """
    pmf = np.ones(1)
    for p in probs:
        nxt = np.zeros(pmf.size + 1)
        nxt[:-1] = pmf * (1.0 - p)
        nxt[1:] += pmf * p
        pmf = nxt
    return pmf


def team_error_pair(local_errors: Sequence[ErrorPair], votes_needed: int) -> ErrorPair:
    """Team error probabilities of the L-out-of-N rule from per-agent errors.

    Votes are conditionally independent given the state; under state 0 agent
    n votes 1 with probability false_alarm_n, under state 1 with probability
    1 - missed_detection_n.
    """
    n = len(local_errors)
    if not 1 <= votes_needed <= n:
        raise ValueError(f"votes_needed must lie in 1..{n}, got {votes_needed}")
    pmf0 = vote_count_pmf([e.false_alarm for e in local_errors])
    pmf1 = vote_count_pmf([1.0 - e.missed_detection for e in local_errors])
    fa = min(1.0, max(0.0, float(pmf0[votes_needed:].sum())))
    md = min(1.0, max(0.0, float(pmf1[:votes_needed].sum())))
    return ErrorPair(fa, md)


def bayes_risk(prior: Prior, costs: CostModel, team: ErrorPair) -> float:
    """Expected decision cost of the team decision."""
    return (
        costs.false_alarm * prior.p0 * team.false_alarm
        + costs.missed_detection * prior.p1 * team.missed_detection
    )
