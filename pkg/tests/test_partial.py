"""Partial vote visibility: marginal beliefs and information-set policies."""

import itertools

import numpy as np
import pytest

from votefusion import (
    CostModel,
    FusionRule,
    GaussianModel,
    ImpossibleObservationError,
    ObservationGraph,
    Prior,
    belief_update,
    Belief,
    constant_policy,
    history_belief,
    marginal_belief_update,
    optimal_partial_policy,
    optimal_public_policy,
    optimal_secret_thresholds,
    partial_bayes_risk,
)

UNIT = GaussianModel(1.0)
EVEN = Prior(0.5)
UNIT_COSTS = CostModel(1.0, 1.0)


class TestObservationGraph:
    def test_backward_edges_only(self):
        with pytest.raises(ValueError):
            ObservationGraph(((), (1,), ()))
        with pytest.raises(ValueError):
            ObservationGraph(((0,), ()))

    def test_builders(self):
        assert ObservationGraph.chain(3).observed == ((), (0,), (1,))
        assert ObservationGraph.full(3).observed == ((), (0,), (0, 1))
        assert ObservationGraph.empty(3).observed == ((), (), ())
        assert ObservationGraph.full(3).is_full()
        assert not ObservationGraph.chain(3).is_full()

    def test_pattern_extraction(self):
        graph = ObservationGraph(((), (0,), (0, 1)))
        assert graph.pattern_for(2, "10") == (1, 0)
        assert graph.pattern_for(1, "1") == (1,)
        assert graph.pattern_for(0, "") == ()


class TestMarginalBelief:
    def test_full_observation_equals_chained_update(self):
        models = (GaussianModel(0.5), GaussianModel(1.0), GaussianModel(2.0))
        thresholds = (0.2, 0.8, -0.4)
        graph = ObservationGraph.full(3)
        policy = constant_policy(FusionRule(2, 3), thresholds)
        for bits in itertools.product((0, 1), repeat=2):
            observed = {0: bits[0], 1: bits[1]}
            marginal = marginal_belief_update(EVEN, models, thresholds, graph, 2, observed)
            chained = history_belief(EVEN, models, policy, "".join(map(str, bits)))
            assert marginal.p0 == pytest.approx(chained.p0, abs=1e-14)

    def test_empty_observation_returns_prior(self):
        graph = ObservationGraph.empty(3)
        belief = marginal_belief_update(
            Prior(0.3), (UNIT,) * 3, (0.1, 0.2, 0.3), graph, 2, {}
        )
        assert belief.p0 == 0.3

    def test_chain_middle_vote_matches_hand_enumeration(self):
        # third agent sees only the second vote; marginalize the first by hand
        models = (GaussianModel(0.5), GaussianModel(1.0), GaussianModel(2.0))
        thresholds = (0.4, 0.6, 0.5)
        graph = ObservationGraph.chain(3)
        prior = Prior(0.3)
        belief = marginal_belief_update(prior, models, thresholds, graph, 2, {1: 0})

        e0 = models[0].error_pair(thresholds[0])
        e1 = models[1].error_pair(thresholds[1])
        mass0 = mass1 = 0.0
        for v0 in (0, 1):
            mass0 += (e0.false_alarm if v0 else 1 - e0.false_alarm) * (1 - e1.false_alarm)
            mass1 += ((1 - e0.missed_detection) if v0 else e0.missed_detection) * e1.missed_detection
        expected = prior.p0 * mass0 / (prior.p0 * mass0 + prior.p1 * mass1)
        assert belief.p0 == pytest.approx(expected, abs=1e-14)

    def test_single_observed_vote_equals_plain_update_when_first(self):
        models = (UNIT, UNIT)
        graph = ObservationGraph.chain(2)
        belief = marginal_belief_update(EVEN, models, (0.5, 0.5), graph, 1, {0: 1})
        direct = belief_update(Belief(0.5), UNIT.error_pair(0.5), 1)
        assert belief.p0 == pytest.approx(direct.p0, abs=1e-15)

    def test_wrong_observation_keys_rejected(self):
        graph = ObservationGraph.chain(3)
        with pytest.raises(ValueError):
            marginal_belief_update(EVEN, (UNIT,) * 3, (0.5,) * 3, graph, 2, {0: 1})

    def test_impossible_observation_raises(self):
        # first voter never votes 1 (threshold +inf), yet a 1 is observed
        graph = ObservationGraph.chain(2)
        with pytest.raises(ImpossibleObservationError):
            marginal_belief_update(
                EVEN, (UNIT, UNIT), (float("inf"), 0.5), graph, 1, {0: 1}
            )


class TestOptimalPartialPolicy:
    def test_iid_chain_recovers_secret_risk(self):
        rule = FusionRule(2, 3)
        secret = optimal_secret_thresholds(Prior(0.3), UNIT_COSTS, (UNIT,) * 3, rule)
        _, report = optimal_partial_policy(
            Prior(0.3), UNIT_COSTS, (UNIT,) * 3, rule, ObservationGraph.chain(3)
        )
        assert abs(report.risk - secret.risk) < 1e-8

    def test_iid_risks_coincide_across_all_three_regimes(self):
        rng = np.random.default_rng(31)
        for team in (3, 5):
            prior = Prior(float(rng.uniform(0.15, 0.85)))
            costs = CostModel(float(rng.uniform(0.4, 2.5)), 1.0)
            model = GaussianModel(float(rng.uniform(0.3, 2.0)))
            rule = FusionRule(int(rng.integers(2, team)), team)
            observed = tuple(
                tuple(m for m in range(n) if rng.random() < 0.5) for n in range(team)
            )
            secret = optimal_secret_thresholds(prior, costs, (model,) * team, rule)
            _, partial_report = optimal_partial_policy(
                prior, costs, (model,) * team, rule, ObservationGraph(observed)
            )
            _, public_report = optimal_public_policy(prior, costs, (model,) * team, rule)
            assert abs(partial_report.risk - secret.risk) < 1e-8
            assert abs(public_report.risk - secret.risk) < 1e-8

    def test_empty_graph_reduces_to_secret(self):
        rule = FusionRule(2, 4)
        models = tuple(GaussianModel(v) for v in (0.3, 0.8, 1.4, 2.0))
        prior, costs = Prior(0.4), CostModel(1.2, 0.7)
        secret = optimal_secret_thresholds(prior, costs, models, rule)
        policy, report = optimal_partial_policy(
            prior, costs, models, rule, ObservationGraph.empty(4)
        )
        assert report.risk == pytest.approx(secret.risk, abs=1e-9)
        for agent in range(4):
            assert policy.threshold_at(agent, ()) == pytest.approx(
                secret.thresholds[agent], abs=1e-6
            )

    def test_full_graph_reduces_to_public(self):
        rule = FusionRule(2, 3)
        models = (GaussianModel(0.25), GaussianModel(1.0), GaussianModel(2.25))
        prior, costs = Prior(0.45), CostModel(0.8, 1.1)
        pub_policy, pub_report = optimal_public_policy(prior, costs, models, rule)
        par_policy, par_report = optimal_partial_policy(
            prior, costs, models, rule, ObservationGraph.full(3)
        )
        assert par_report.risk == pytest.approx(pub_report.risk, abs=1e-9)
        # information sets coincide with histories, so live thresholds match
        for history in ("", "0", "1"):
            pattern = tuple(int(b) for b in history)
            assert par_policy.threshold_at(len(history), pattern) == pytest.approx(
                pub_policy.threshold_at(history), abs=1e-6
            )

    def test_sandwich_between_secret_and_public(self):
        rng = np.random.default_rng(23)
        for _ in range(4):
            team = int(rng.integers(2, 5))
            rule = FusionRule(int(rng.integers(1, team + 1)), team)
            prior = Prior(float(rng.uniform(0.15, 0.85)))
            costs = CostModel(float(rng.uniform(0.4, 2.5)), 1.0)
            models = tuple(GaussianModel(float(rng.uniform(0.2, 3.0))) for _ in range(team))
            observed = tuple(
                tuple(m for m in range(n) if rng.random() < 0.5) for n in range(team)
            )
            graph = ObservationGraph(observed)
            secret = optimal_secret_thresholds(prior, costs, models, rule)
            _, partial_report = optimal_partial_policy(prior, costs, models, rule, graph)
            _, public_report = optimal_public_policy(prior, costs, models, rule)
            assert secret.risk >= partial_report.risk - 1e-10
            assert partial_report.risk >= public_report.risk - 1e-10

    def test_risk_report_consistent_with_reevaluation(self):
        rule = FusionRule(2, 3)
        models = (GaussianModel(0.5), GaussianModel(1.0), GaussianModel(1.5))
        policy, report = optimal_partial_policy(
            EVEN, UNIT_COSTS, models, rule, ObservationGraph.chain(3)
        )
        again = partial_bayes_risk(EVEN, UNIT_COSTS, models, policy)
        assert report.risk == pytest.approx(again.risk, abs=1e-14)
        assert report.team_errors == again.team_errors

    def test_graph_team_size_mismatch(self):
        with pytest.raises(ValueError):
            optimal_partial_policy(
                EVEN, UNIT_COSTS, (UNIT,) * 3, FusionRule(2, 3), ObservationGraph.chain(2)
            )

    def test_nonconvergence_raises_solver_error(self):
        from votefusion import SolverError

        with pytest.raises(SolverError):
            optimal_partial_policy(
                EVEN,
                UNIT_COSTS,
                (UNIT,) * 3,
                FusionRule(2, 3),
                ObservationGraph.chain(3),
                max_sweeps=0,
            )
