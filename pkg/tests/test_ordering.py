"""ROC sweeps, acting-order search, and unanimity invariance."""

import pytest

from votefusion import (
    CostModel,
    FusionRule,
    GaussianModel,
    Prior,
    agent_informativeness,
    best_ordering,
    default_sweep_weights,
    optimal_public_policy,
    reversed_roc,
    unanimity_check,
)

HET3 = (GaussianModel(0.25), GaussianModel(1.0), GaussianModel(2.25))
HET4 = (GaussianModel(0.25), GaussianModel(0.5), GaussianModel(1.0), GaussianModel(2.25))
EVEN = Prior(0.5)
UNIT_COSTS = CostModel(1.0, 1.0)
FEW_WEIGHTS = default_sweep_weights(9, 1e-2, 1e2)


class TestReversedRoc:
    def test_single_agent_curve_is_local_roc(self):
        model = GaussianModel(1.0)
        curve = reversed_roc((model,), FusionRule(1, 1), "secret", weights=FEW_WEIGHTS)
        for point in curve.sweep:
            # each sweep optimum is the agent's own LRT operating point
            threshold = model.invert_likelihood_ratio(point.weight)
            e = model.error_pair(threshold)
            assert point.team_errors.false_alarm == pytest.approx(e.false_alarm, abs=1e-9)
            assert point.team_errors.missed_detection == pytest.approx(
                e.missed_detection, abs=1e-9
            )

    def test_iid_public_and_secret_curves_coincide(self):
        models = (GaussianModel(0.8),) * 3
        rule = FusionRule(2, 3)
        secret = reversed_roc(models, rule, "secret", weights=FEW_WEIGHTS)
        public = reversed_roc(models, rule, "public", weights=FEW_WEIGHTS)
        for s, p in zip(secret.sweep, public.sweep):
            assert p.team_errors.false_alarm == pytest.approx(
                s.team_errors.false_alarm, abs=1e-6
            )
            assert p.team_errors.missed_detection == pytest.approx(
                s.team_errors.missed_detection, abs=1e-6
            )

    def test_public_curve_value_dominates_secret(self):
        rule = FusionRule(2, 3)
        secret = reversed_roc(HET3, rule, "secret", weights=FEW_WEIGHTS)
        public = reversed_roc(HET3, rule, "public", ordering=(1, 0, 2), weights=FEW_WEIGHTS)
        strict = 0
        for s, p in zip(secret.sweep, public.sweep):
            assert p.risk <= s.risk + 1e-8
            if s.risk - p.risk > 1e-6:
                strict += 1
        assert strict >= 1

    def test_points_are_pareto_pruned_and_sorted(self):
        curve = reversed_roc(HET3, FusionRule(2, 3), "secret", weights=FEW_WEIGHTS)
        fas = [p.team_errors.false_alarm for p in curve.points]
        mds = [p.team_errors.missed_detection for p in curve.points]
        assert fas == sorted(fas)
        assert all(a > b for a, b in zip(mds, mds[1:]))

    def test_jobs_do_not_change_results(self):
        rule = FusionRule(2, 3)
        serial = reversed_roc(HET3, rule, "secret", weights=FEW_WEIGHTS, jobs=1)
        threaded = reversed_roc(HET3, rule, "secret", weights=FEW_WEIGHTS, jobs=4)
        assert serial == threaded

    def test_rejects_bad_weights(self):
        with pytest.raises(ValueError):
            reversed_roc(HET3, FusionRule(2, 3), "secret", weights=())

    def test_failed_weight_skipped_and_reported(self):
        curve = reversed_roc(
            HET3, FusionRule(2, 3), "secret", weights=(0.5, -1.0, 2.0)
        )
        assert len(curve.sweep) == 2
        assert len(curve.failures) == 1
        assert curve.failures[0][0] == -1.0


class TestBestOrdering:
    def test_majority_of_three_puts_median_quality_first(self):
        result = best_ordering(EVEN, UNIT_COSTS, HET3, FusionRule(2, 3))
        assert result.ordering[0] == 1  # variance 1.0 agent, the median
        assert len(result.ranking) == 3  # suffix order provably irrelevant

    def test_two_of_four_puts_second_best_first(self):
        result = best_ordering(EVEN, UNIT_COSTS, HET4, FusionRule(2, 4))
        assert result.ordering[0] == 1  # variance 0.5 agent, second best
        assert len(result.ranking) == 12  # ordered pair prefix, suffix free

    def test_unanimity_rules_collapse_to_one_class(self):
        for rule in (FusionRule(1, 3), FusionRule(3, 3)):
            result = best_ordering(EVEN, UNIT_COSTS, HET3, rule)
            assert len(result.ranking) == 1

    def test_informativeness_orders_by_variance(self):
        info = agent_informativeness(HET4)
        assert list(info) == sorted(info)

    def test_team_too_large_for_search(self):
        models = (GaussianModel(1.0),) * 9
        with pytest.raises(ValueError, match="explicit ordering"):
            best_ordering(EVEN, UNIT_COSTS, models, FusionRule(4, 9))

    def test_last_two_agents_commute_under_majority(self):
        # direct check of the symmetry the representative pruning relies on
        prior, costs = Prior(0.4), CostModel(1.3, 0.9)
        rule = FusionRule(2, 3)
        risks = {}
        for order in ((0, 1, 2), (0, 2, 1)):
            acting = tuple(HET3[i] for i in order)
            _, report = optimal_public_policy(prior, costs, acting, rule)
            risks[order] = report.risk
        assert abs(risks[(0, 1, 2)] - risks[(0, 2, 1)]) < 1e-10


class TestUnanimityCheck:
    def test_or_rule_two_heterogeneous_agents(self):
        report = unanimity_check(
            EVEN, UNIT_COSTS, (GaussianModel(0.25), GaussianModel(1.0)), FusionRule(1, 2)
        )
        assert report.is_unanimity and report.passed
        assert report.risk_spread < 1e-8
        assert report.public_secret_gap < 1e-8
        assert report.position_threshold_spread < 1e-6
        assert report.history_dependence < 1e-6

    def test_and_rule_three_heterogeneous_agents(self):
        report = unanimity_check(
            Prior(0.35),
            CostModel(1.4, 0.8),
            (GaussianModel(0.5), GaussianModel(1.2), GaussianModel(2.0)),
            FusionRule(3, 3),
        )
        assert report.is_unanimity and report.passed

    def test_majority_rule_classified_only(self):
        report = unanimity_check(EVEN, UNIT_COSTS, HET3, FusionRule(2, 3))
        assert not report.is_unanimity
        assert report.passed is None
        assert report.risk_spread is None
