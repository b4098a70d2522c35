"""Core types, signal models, and exact team error computations."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from votefusion import (
    CostModel,
    ErrorPair,
    ExponentialModel,
    FusionRule,
    GaussianModel,
    Prior,
    bayes_risk,
    team_error_pair,
    vote_count_pmf,
)


class TestTypes:
    def test_prior_complement(self):
        p = Prior(0.3)
        assert p.p1 == 0.7
        assert p.p0 + p.p1 == 1.0

    @pytest.mark.parametrize("bad", [-0.1, 1.1, float("nan")])
    def test_prior_rejects_out_of_range(self, bad):
        with pytest.raises(ValueError):
            Prior(bad)

    def test_degenerate_prior_allowed_but_not_for_optimization(self):
        p = Prior(0.0)
        with pytest.raises(ValueError, match="degenerate"):
            p.require_interior()

    @pytest.mark.parametrize("fa,md", [(0.0, 1.0), (-1.0, 0.5), (0.5, math.inf)])
    def test_cost_model_requires_positive(self, fa, md):
        with pytest.raises(ValueError):
            CostModel(fa, md)

    @pytest.mark.parametrize("need,team", [(0, 3), (4, 3), (1, 0)])
    def test_fusion_rule_bounds(self, need, team):
        with pytest.raises(ValueError):
            FusionRule(need, team)

    def test_unanimity_classification(self):
        assert FusionRule(1, 3).is_unanimity
        assert FusionRule(3, 3).is_unanimity
        assert not FusionRule(2, 3).is_unanimity
        assert FusionRule(1, 1).is_unanimity

    def test_error_pair_range(self):
        with pytest.raises(ValueError):
            ErrorPair(1.2, 0.0)


class TestGaussianModel:
    def test_lr_at_midpoint_is_one(self):
        assert GaussianModel(1.0).likelihood_ratio(0.5) == pytest.approx(1.0, abs=0.0)

    def test_lr_closed_form_values(self):
        # exp((2y-1)/(2 var)) evaluated by hand at var=1
        m = GaussianModel(1.0)
        assert m.likelihood_ratio(1.5) == pytest.approx(math.e, rel=1e-15)
        assert m.likelihood_ratio(-0.5) == pytest.approx(1.0 / math.e, rel=1e-15)

    def test_invert_lr_closed_form(self):
        m = GaussianModel(1.0)
        assert m.invert_likelihood_ratio(1.0) == pytest.approx(0.5, abs=1e-15)
        assert m.invert_likelihood_ratio(math.e) == pytest.approx(1.5, rel=1e-12)

    @given(st.floats(-30, 30), st.floats(0.05, 10))
    @settings(max_examples=200, deadline=None)
    def test_invert_lr_round_trip(self, y, var):
        m = GaussianModel(var)
        recovered = m.invert_likelihood_ratio(m.likelihood_ratio(y))
        assert recovered == pytest.approx(y, rel=1e-10, abs=1e-10)

    def test_invert_lr_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            GaussianModel(1.0).invert_likelihood_ratio(0.0)
        with pytest.raises(ValueError):
            GaussianModel(1.0).invert_likelihood_ratio(math.inf)

    def test_error_pair_symmetric_at_midpoint(self):
        e = GaussianModel(1.0).error_pair(0.5)
        assert e.false_alarm == pytest.approx(e.missed_detection, abs=1e-15)
        # independent CDF evaluation of the standard normal tail at 0.5
        assert e.false_alarm == pytest.approx(stats.norm.sf(0.5), abs=1e-14)

    def test_error_pair_at_limits(self):
        m = GaussianModel(2.0)
        assert m.error_pair(math.inf) == ErrorPair(0.0, 1.0)
        assert m.error_pair(-math.inf) == ErrorPair(1.0, 0.0)

    def test_error_pair_monotone_in_threshold(self):
        m = GaussianModel(0.7)
        grid = np.linspace(-6, 7, 301)
        pairs = [m.error_pair(t) for t in grid]
        fa = [e.false_alarm for e in pairs]
        md = [e.missed_detection for e in pairs]
        assert all(a >= b for a, b in zip(fa, fa[1:]))
        assert all(a <= b for a, b in zip(md, md[1:]))

    @given(st.floats(0.05, 10))
    @settings(max_examples=50, deadline=None)
    def test_lr_strictly_increasing(self, var):
        m = GaussianModel(var)
        ys = np.linspace(-8, 9, 200)
        lrs = [m.log_likelihood_ratio(y) for y in ys]
        assert all(a < b for a, b in zip(lrs, lrs[1:]))


class TestExponentialModel:
    def test_requires_rate_ordering(self):
        with pytest.raises(ValueError):
            ExponentialModel(1.0, 2.0)

    def test_lr_monotone_and_invertible(self):
        m = ExponentialModel(3.0, 1.0)
        ys = np.linspace(0.0, 10.0, 100)
        lrs = [m.likelihood_ratio(y) for y in ys]
        assert all(a < b for a, b in zip(lrs, lrs[1:]))
        for y in (0.0, 0.3, 2.7):
            assert m.invert_likelihood_ratio(m.likelihood_ratio(y)) == pytest.approx(
                y, rel=1e-10, abs=1e-10
            )

    def test_signal_outside_support_is_domain_error(self):
        with pytest.raises(ValueError):
            ExponentialModel(2.0, 1.0).likelihood_ratio(-0.5)

    def test_target_below_lr_range_is_range_error(self):
        m = ExponentialModel(2.0, 1.0)
        with pytest.raises(ValueError):
            m.invert_likelihood_ratio(0.4)  # range starts at rate1/rate0 = 0.5

    def test_error_pair_against_closed_forms(self):
        m = ExponentialModel(2.0, 0.5)
        e = m.error_pair(1.0)
        assert e.false_alarm == pytest.approx(math.exp(-2.0), rel=1e-14)
        assert e.missed_detection == pytest.approx(1.0 - math.exp(-0.5), rel=1e-14)
        assert m.error_pair(-3.0) == ErrorPair(1.0, 0.0)


class TestTeamErrors:
    def test_no_false_alarms_propagate(self):
        locals_ = [ErrorPair(0.0, 0.3)] * 4
        for need in range(1, 5):
            assert team_error_pair(locals_, need).false_alarm == 0.0

    def test_symmetric_binomial_majority(self):
        locals_ = [ErrorPair(0.5, 0.5)] * 3
        team = team_error_pair(locals_, 2)
        assert team.false_alarm == pytest.approx(0.5, abs=1e-15)

    def test_two_agent_or_rule_by_expansion(self):
        team = team_error_pair([ErrorPair(0.1, 0.5), ErrorPair(0.2, 0.5)], 1)
        assert team.false_alarm == pytest.approx(0.28, abs=1e-15)

    def test_votes_needed_out_of_range(self):
        with pytest.raises(ValueError):
            team_error_pair([ErrorPair(0.1, 0.1)], 2)

    @given(
        st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=10),
        st.data(),
    )
    @settings(max_examples=150, deadline=None)
    def test_matches_subset_enumeration(self, pairs, data):
        locals_ = [ErrorPair(fa, md) for fa, md in pairs]
        n = len(locals_)
        need = data.draw(st.integers(1, n))
        team = team_error_pair(locals_, need)

        fa = md = 0.0
        for votes in itertools.product((0, 1), repeat=n):
            p0 = p1 = 1.0
            for v, e in zip(votes, locals_):
                p0 *= e.false_alarm if v else 1.0 - e.false_alarm
                p1 *= (1.0 - e.missed_detection) if v else e.missed_detection
            if sum(votes) >= need:
                fa += p0
            else:
                md += p1
        assert team.false_alarm == pytest.approx(fa, abs=1e-12)
        assert team.missed_detection == pytest.approx(md, abs=1e-12)

    def test_pmf_sums_to_one(self):
        pmf = vote_count_pmf([0.2, 0.7, 0.4, 0.9])
        assert pmf.sum() == pytest.approx(1.0, abs=1e-14)


class TestBayesRisk:
    def test_symmetric_weighting(self):
        assert bayes_risk(Prior(0.5), CostModel(1, 1), ErrorPair(0.3, 0.3)) == pytest.approx(
            0.3, abs=1e-15
        )

    def test_perfect_detection_is_free(self):
        assert bayes_risk(Prior(0.3), CostModel(5, 7), ErrorPair(0.0, 0.0)) == 0.0

    def test_hand_arithmetic(self):
        value = bayes_risk(Prior(0.25), CostModel(2, 1), ErrorPair(0.1, 0.2))
        assert value == pytest.approx(0.2, abs=1e-15)

    def test_constant_vote_policies_hit_exact_bounds(self):
        prior, costs = Prior(0.37), CostModel(1.7, 0.4)
        always_zero = team_error_pair([ErrorPair(0.0, 1.0)] * 3, 2)
        always_one = team_error_pair([ErrorPair(1.0, 0.0)] * 3, 2)
        assert bayes_risk(prior, costs, always_zero) == costs.missed_detection * prior.p1
        assert bayes_risk(prior, costs, always_one) == costs.false_alarm * prior.p0
