"""Seeded Monte Carlo runs of the sequential voting protocol.

Validates the analytic error probabilities end to end: draw the state from
the prior, draw each agent's private signal, walk the agents in acting order
looking up each one's threshold from her observed votes, fuse with the
L-out-of-N rule, and tally empirical error frequencies.

Randomness is counter-based: every draw is a pure function of (seed, counter)
through a SplitMix64-style mix, and trial t owns the counter block
[t*(N+1), (t+1)*(N+1)).  Trials are therefore order-independent and safe to
process in chunks or in parallel without changing a single bit of output.
Signals come from inverse-CDF transforms of the uniforms, so the sampler and
the analytic CDFs share one definition of each distribution.  All tallies
are integer counts, so accumulation order cannot perturb the results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ErrorPair, PolicyIncompleteError
from .partial import PartialPolicy
from .public import VotePolicy, _policy_nodes
from .scenarios import Scenario
from .secret import SecretSolution

__all__ = [
    "SimConfig",
    "SimulationResult",
    "simulate_team",
    "counter_uniforms",
    "protocol_votes",
]

_GAMMA = np.uint64(0x9E3779B97F4B7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_CHUNK = 1 << 16


def counter_uniforms(seed: int, counters: np.ndarray) -> np.ndarray:
    """Uniform(0, 1) draws, one per counter, as a pure function of the seed.

    SplitMix64 output function over seed + (counter+1)*gamma; the top 53 bits
    (offset by half an ulp) give uniforms strictly inside (0, 1).
    """
    seed64 = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    z = seed64 + (counters.astype(np.uint64) + np.uint64(1)) * _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


@dataclass(frozen=True)
class SimConfig:
    """One reproducible simulation request.

    ``policy`` must match the scenario's mode: a per-agent threshold tuple or
    SecretSolution for secret voting, a VotePolicy for public voting, and a
    PartialPolicy for partial voting (all keyed in acting order).
    """

    trials: int
    seed: int
    scenario: Scenario
    policy: object

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class SimulationResult:
    """Empirical team error frequencies, risk, and their standard errors."""

    team_errors: ErrorPair
    risk: float
    se_false_alarm: float
    se_missed_detection: float
    se_risk: float
    trials: int
    state0_trials: int
    state1_trials: int
    false_alarms: int
    missed_detections: int


def _threshold_tables(scenario: Scenario, policy) -> list[np.ndarray]:
    """Per-agent lookup tables from observed-vote index to threshold.

    Agent at acting position n indexes her table with the integer encoding
    (first observed bit = most significant) of the votes she can see: the
    full history in public mode, her observed subset in partial mode, and
    nothing in secret mode.
    """
    n = scenario.rule.team_size
    if scenario.mode == "secret":
        if isinstance(policy, SecretSolution):
            thresholds = policy.thresholds
        else:
            thresholds = tuple(policy)
        if len(thresholds) != n:
            raise PolicyIncompleteError(
                f"secret policy has {len(thresholds)} thresholds for a team of {n}"
            )
        return [np.array([t], dtype=float) for t in thresholds]
    if scenario.mode == "public":
        if not isinstance(policy, VotePolicy):
            raise TypeError("public mode requires a VotePolicy")
        meaningful, _ = _policy_nodes(scenario.rule)
        for level in meaningful:
            for history in level:
                policy.threshold_at(history)  # raises before any sampling
        tables = []
        for agent in range(n):
            table = np.empty(1 << agent, dtype=float)
            for idx in range(1 << agent):
                history = format(idx, f"0{agent}b") if agent else ""
                table[idx] = policy.resolve(history)
            tables.append(table)
        return tables
    if scenario.mode == "partial":
        if not isinstance(policy, PartialPolicy):
            raise TypeError("partial mode requires a PartialPolicy")
        graph = policy.graph
        tables = []
        for agent in range(n):
            width = len(graph.observed[agent])
            table = np.empty(1 << width, dtype=float)
            for idx in range(1 << width):
                bits = tuple((idx >> (width - 1 - k)) & 1 for k in range(width))
                table[idx] = policy.threshold_at(agent, bits)
            tables.append(table)
        return tables
    raise ValueError(f"unknown mode {scenario.mode!r}")


def _observed_positions(mode: str, n: int, graph) -> tuple[tuple[int, ...], ...]:
    if mode == "partial":
        return graph.observed
    if mode == "public":
        return tuple(tuple(range(k)) for k in range(n))
    return tuple(() for _ in range(n))


def protocol_votes(signals: np.ndarray, tables, observed) -> np.ndarray:
    """Vectorized sequential voting over rows of private signals.

    Agent n votes 1 when her signal reaches the threshold looked up from the
    votes she observes (``tables[n]`` indexed by the observed bit pattern,
    first observed position as the most significant bit).
    """
    rows, n = signals.shape
    votes = np.zeros((rows, n), dtype=np.int64)
    for agent in range(n):
        obs = observed[agent]
        if not obs:
            thresholds = tables[agent][np.zeros(rows, dtype=np.int64)]
        else:
            pattern = np.zeros(rows, dtype=np.int64)
            width = len(obs)
            for k, m in enumerate(obs):
                pattern += votes[:, m] << (width - 1 - k)
            thresholds = tables[agent][pattern]
        votes[:, agent] = signals[:, agent] >= thresholds
    return votes


def simulate_team(config: SimConfig) -> SimulationResult:
    """Run the voting protocol for the configured number of trials.

    Identical (seed, config) inputs reproduce identical outputs bit for bit.
    """
    scenario = config.scenario
    n = scenario.rule.team_size
    need = scenario.rule.votes_needed
    models = scenario.acting_models
    tables = _threshold_tables(scenario, config.policy)
    observed = _observed_positions(scenario.mode, n, scenario.graph)

    draws_per_trial = n + 1
    trials = config.trials
    state0 = state1 = false_alarms = missed = 0

    for start in range(0, trials, _CHUNK):
        count = min(_CHUNK, trials - start)
        base = (np.arange(start, start + count, dtype=np.uint64)) * np.uint64(draws_per_trial)
        counters = base[:, None] + np.arange(draws_per_trial, dtype=np.uint64)[None, :]
        uniforms = counter_uniforms(config.seed, counters)
        states = (uniforms[:, 0] >= scenario.prior.p0).astype(np.int64)

        signals = np.empty((count, n))
        for agent in range(n):
            signals[:, agent] = models[agent].quantile(uniforms[:, 1 + agent], states)
        votes = protocol_votes(signals, tables, observed)
        decisions = (votes.sum(axis=1) >= need).astype(np.int64)
        state0 += int((states == 0).sum())
        state1 += int((states == 1).sum())
        false_alarms += int(((states == 0) & (decisions == 1)).sum())
        missed += int(((states == 1) & (decisions == 0)).sum())

    fa_rate = false_alarms / state0 if state0 else 0.0
    md_rate = missed / state1 if state1 else 0.0
    se_fa = math.sqrt(fa_rate * (1.0 - fa_rate) / state0) if state0 else math.inf
    se_md = math.sqrt(md_rate * (1.0 - md_rate) / state1) if state1 else math.inf

    c_fa = scenario.costs.false_alarm
    c_md = scenario.costs.missed_detection
    mean_cost = (c_fa * false_alarms + c_md * missed) / trials
    mean_sq = (c_fa**2 * false_alarms + c_md**2 * missed) / trials
    variance = max(0.0, mean_sq - mean_cost**2)
    se_risk = math.sqrt(variance / trials)

    return SimulationResult(
        team_errors=ErrorPair(fa_rate, md_rate),
        risk=mean_cost,
        se_false_alarm=se_fa,
        se_missed_detection=se_md,
        se_risk=se_risk,
        trials=trials,
        state0_trials=state0,
        state1_trials=state1,
        false_alarms=false_alarms,
        missed_detections=missed,
    )
