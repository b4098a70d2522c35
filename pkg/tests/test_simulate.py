"""Monte Carlo validation of the voting protocol."""

import numpy as np
import pytest

from votefusion import (
    CostModel,
    FusionRule,
    GaussianModel,
    ObservationGraph,
    PolicyIncompleteError,
    Prior,
    Scenario,
    SimConfig,
    bayes_risk,
    counter_uniforms,
    optimal_partial_policy,
    optimal_public_policy,
    optimal_secret_thresholds,
    simulate_team,
    team_error_pair,
)

UNIT = GaussianModel(1.0)
EVEN = Prior(0.5)
UNIT_COSTS = CostModel(1.0, 1.0)


class TestCounterUniforms:
    def test_deterministic_and_in_unit_interval(self):
        idx = np.arange(0, 10000, dtype=np.uint64)
        u1 = counter_uniforms(12345, idx)
        u2 = counter_uniforms(12345, idx)
        assert np.array_equal(u1, u2)
        assert u1.min() > 0.0 and u1.max() < 1.0

    def test_streams_are_order_independent(self):
        idx = np.arange(0, 1000, dtype=np.uint64)
        shuffled = idx.copy()
        np.random.default_rng(0).shuffle(shuffled)
        direct = counter_uniforms(7, shuffled)
        aligned = counter_uniforms(7, idx)[shuffled]
        assert np.array_equal(direct, aligned)

    def test_different_seeds_decorrelate(self):
        idx = np.arange(0, 100000, dtype=np.uint64)
        a = counter_uniforms(1, idx)
        b = counter_uniforms(2, idx)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.01

    def test_mean_and_variance_look_uniform(self):
        u = counter_uniforms(99, np.arange(0, 200000, dtype=np.uint64))
        assert u.mean() == pytest.approx(0.5, abs=0.005)
        assert u.var() == pytest.approx(1.0 / 12.0, abs=0.005)


class TestSimulateTeam:
    def test_same_seed_bitwise_identical(self):
        scenario = Scenario(EVEN, UNIT_COSTS, (UNIT,) * 3, FusionRule(2, 3), mode="secret")
        config = SimConfig(200_000, 2024, scenario, (0.5, 0.5, 0.5))
        assert simulate_team(config) == simulate_team(config)

    def test_different_seed_differs(self):
        scenario = Scenario(EVEN, UNIT_COSTS, (UNIT,) * 3, FusionRule(2, 3), mode="secret")
        r1 = simulate_team(SimConfig(100_000, 1, scenario, (0.5, 0.5, 0.5)))
        r2 = simulate_team(SimConfig(100_000, 2, scenario, (0.5, 0.5, 0.5)))
        assert r1 != r2

    def test_near_perfect_agents_never_err(self):
        sharp = GaussianModel(1e-8)
        scenario = Scenario(EVEN, UNIT_COSTS, (sharp,) * 3, FusionRule(2, 3), mode="secret")
        result = simulate_team(SimConfig(100_000, 7, scenario, (0.5, 0.5, 0.5)))
        assert result.false_alarms == 0
        assert result.missed_detections == 0

    def test_secret_mode_matches_analytic_within_three_se(self):
        thresholds = (0.5, 0.5, 0.5)
        scenario = Scenario(EVEN, UNIT_COSTS, (UNIT,) * 3, FusionRule(2, 3), mode="secret")
        analytic = team_error_pair([UNIT.error_pair(t) for t in thresholds], 2)
        result = simulate_team(SimConfig(1_000_000, 31337, scenario, thresholds))
        assert abs(result.team_errors.false_alarm - analytic.false_alarm) < (
            3 * result.se_false_alarm
        )
        assert abs(result.team_errors.missed_detection - analytic.missed_detection) < (
            3 * result.se_missed_detection
        )
        assert abs(result.risk - bayes_risk(EVEN, UNIT_COSTS, analytic)) < 3 * result.se_risk

    def test_public_mode_matches_analytic(self):
        models = (GaussianModel(0.25), GaussianModel(1.0), GaussianModel(2.25))
        rule = FusionRule(2, 3)
        policy, report = optimal_public_policy(EVEN, UNIT_COSTS, models, rule)
        scenario = Scenario(EVEN, UNIT_COSTS, models, rule, mode="public")
        result = simulate_team(SimConfig(400_000, 99, scenario, policy))
        assert abs(result.team_errors.false_alarm - report.team_errors.false_alarm) < (
            3 * result.se_false_alarm
        )
        assert abs(
            result.team_errors.missed_detection - report.team_errors.missed_detection
        ) < 3 * result.se_missed_detection

    def test_partial_mode_matches_analytic(self):
        models = (GaussianModel(0.5), GaussianModel(1.0), GaussianModel(1.5))
        rule = FusionRule(2, 3)
        graph = ObservationGraph.chain(3)
        policy, report = optimal_partial_policy(EVEN, UNIT_COSTS, models, rule, graph)
        scenario = Scenario(EVEN, UNIT_COSTS, models, rule, mode="partial", graph=graph)
        result = simulate_team(SimConfig(400_000, 4242, scenario, policy))
        assert abs(result.team_errors.false_alarm - report.team_errors.false_alarm) < (
            3 * result.se_false_alarm
        )
        assert abs(
            result.team_errors.missed_detection - report.team_errors.missed_detection
        ) < 3 * result.se_missed_detection

    def test_ordering_permutes_agents(self):
        models = (GaussianModel(0.25), GaussianModel(4.0))
        rule = FusionRule(1, 2)
        ordering = (1, 0)
        scenario = Scenario(
            EVEN, UNIT_COSTS, models, rule, mode="secret", ordering=ordering
        )
        # thresholds follow acting order: position 0 is the noisy agent
        solution = optimal_secret_thresholds(
            EVEN, UNIT_COSTS, scenario.acting_models, rule
        )
        result = simulate_team(SimConfig(200_000, 11, scenario, solution))
        analytic = team_error_pair(
            [m.error_pair(t) for m, t in zip(scenario.acting_models, solution.thresholds)], 1
        )
        assert abs(result.team_errors.false_alarm - analytic.false_alarm) < (
            3 * result.se_false_alarm
        )

    def test_incomplete_policy_rejected_before_sampling(self):
        scenario = Scenario(EVEN, UNIT_COSTS, (UNIT,) * 3, FusionRule(2, 3), mode="secret")
        with pytest.raises(PolicyIncompleteError):
            simulate_team(SimConfig(10, 0, scenario, (0.5, 0.5)))

    def test_public_mode_requires_vote_policy(self):
        scenario = Scenario(EVEN, UNIT_COSTS, (UNIT,) * 2, FusionRule(1, 2), mode="public")
        with pytest.raises(TypeError):
            simulate_team(SimConfig(10, 0, scenario, (0.5, 0.5)))

    def test_trial_count_invariance_of_prefix(self):
        # counter-based streams: the first trials of a longer run equal the
        # shorter run exactly
        scenario = Scenario(EVEN, UNIT_COSTS, (UNIT,) * 2, FusionRule(1, 2), mode="secret")
        short = simulate_team(SimConfig(50_000, 5, scenario, (0.4, 0.6)))
        long = simulate_team(SimConfig(100_000, 5, scenario, (0.4, 0.6)))
        # can't compare totals directly, but determinism + order independence
        # imply the short run's counts are reproduced inside a re-run
        again = simulate_team(SimConfig(50_000, 5, scenario, (0.4, 0.6)))
        assert short == again
        assert long.trials == 100_000
