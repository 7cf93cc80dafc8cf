import math

import numpy as np
import pytest

from nof1engine.errors import ValidationError
from nof1engine.priors import (
    EfficacyTransform,
    InterventionPrior,
    PatientProfile,
    PriorModel,
    predict_candidates,
    prob_optimal,
    rank_candidates,
    two_candidate_prob_best,
)


def make_model(entries, residual_sd=1.5, slope=-0.1, intercept=0.4):
    return PriorModel(
        interventions={name: InterventionPrior(**spec) for name, spec in entries.items()},
        residual_sd=residual_sd,
        efficacy=EfficacyTransform(slope=slope, intercept=intercept),
    )


def make_profile(covariates=None, contraindicated=(), patient_id="p1"):
    return PatientProfile(
        patient_id=patient_id,
        covariates=covariates or {},
        contraindicated=frozenset(contraindicated),
    )


class TestPredictCandidates:
    def test_zero_coefficients_keep_base_means(self):
        model = make_model({"a": {"mean": -2.0, "sd": 1.0}, "b": {"mean": -1.0, "sd": 1.0}})
        cands = predict_candidates(model, make_profile())
        assert {c.intervention_id: c.prior_mean for c in cands} == {"a": -2.0, "b": -1.0}

    def test_demo_model_ranks_by_published_efficacy(self, demo_model, demo_profile):
        cands = predict_candidates(demo_model, demo_profile)
        assert [c.intervention_id for c in cands] == [
            "magnesium",
            "sleep_regularity",
            "propranolol",
            "caffeine_reduction",
        ]
        assert [round(c.efficacy, 2) for c in cands] == [0.72, 0.68, 0.65, 0.61]

    def test_linear_adjustment_hand_computed(self):
        # base -2.0 with coefficient 0.5 on a covariate valued 2 -> mean -1.0
        model = make_model(
            {
                "a": {"mean": -2.0, "sd": 1.0, "adjustments": {"x": 0.5}},
                "b": {"mean": -1.0, "sd": 1.0},
            }
        )
        cands = predict_candidates(model, make_profile({"x": 2.0}))
        by_id = {c.intervention_id: c for c in cands}
        assert by_id["a"].prior_mean == pytest.approx(-2.0 + 0.5 * 2.0)

    def test_missing_covariate_is_named_in_error(self):
        model = make_model(
            {"a": {"mean": -2.0, "sd": 1.0, "adjustments": {"sleep_score": 0.1}}, "b": {"mean": 0.0, "sd": 1.0}}
        )
        with pytest.raises(ValidationError, match="sleep_score"):
            predict_candidates(model, make_profile())

    def test_empty_model_rejected(self):
        with pytest.raises(ValidationError):
            PriorModel(interventions={}, residual_sd=1.0)

    def test_sd_inflation_applies_for_flagged_profiles(self):
        model = make_model(
            {
                "a": {"mean": -2.0, "sd": 1.0, "sd_inflation": {"underrepresented_group": 1.5}},
                "b": {"mean": -1.0, "sd": 1.0},
            }
        )
        flagged = predict_candidates(model, make_profile({"underrepresented_group": True}))
        plain = predict_candidates(model, make_profile({"underrepresented_group": False}))
        assert {c.intervention_id: c.prior_sd for c in flagged}["a"] == 1.5
        assert {c.intervention_id: c.prior_sd for c in plain}["a"] == 1.0

    def test_pure_function(self, demo_model, demo_profile):
        a = predict_candidates(demo_model, demo_profile)
        b = predict_candidates(demo_model, demo_profile)
        assert [c.to_dict() for c in a] == [c.to_dict() for c in b]

    def test_efficacy_clamped_to_unit_interval(self):
        model = make_model({"a": {"mean": -50.0, "sd": 1.0}, "b": {"mean": 50.0, "sd": 1.0}})
        cands = predict_candidates(model, make_profile())
        values = [c.efficacy for c in cands]
        assert max(values) == 1.0 and min(values) == 0.0


class TestProbOptimal:
    def test_two_identical_candidates_split_evenly(self):
        sigma = prob_optimal([(-1.0, 1.0), (-1.0, 1.0)], samples=100_000, seed=3)
        assert sigma[0] == pytest.approx(0.5, abs=0.02)
        assert sigma[1] == pytest.approx(0.5, abs=0.02)

    def test_matches_closed_form_normal_difference(self):
        # P(X1 < X2) = Phi((mu2 - mu1) / sqrt(s1^2 + s2^2)) = Phi(1/sqrt(2)) here
        sigma = prob_optimal([(-1.0, 1.0), (0.0, 1.0)], samples=100_000, seed=5)
        assert sigma[0] == pytest.approx(0.5 * (1 + math.erf((1 / math.sqrt(2)) / math.sqrt(2))), abs=0.01)
        assert sigma[0] == pytest.approx(0.7602, abs=0.01)

    def test_three_identical_candidates(self):
        sigma = prob_optimal([(-1.0, 1.0)] * 3, samples=100_000, seed=11)
        for s in sigma:
            assert s == pytest.approx(1 / 3, abs=0.02)

    @pytest.mark.parametrize("dmu", [0.0, 0.5, 1.0, 1.5, 2.0])
    @pytest.mark.parametrize("s", [0.5, 1.0, 1.5, 2.0, 3.0])
    def test_closed_form_grid(self, dmu, s):
        sigma = prob_optimal([(-dmu, s), (0.0, s)], samples=100_000, seed=17)
        assert sigma[0] == pytest.approx(two_candidate_prob_best(-dmu, s, 0.0, s), abs=0.01)

    def test_sigmas_sum_to_exactly_one(self):
        for k, seed in [(2, 0), (3, 1), (5, 2), (7, 3)]:
            sigma = prob_optimal([(-i * 0.3, 1.0 + 0.1 * i) for i in range(k)], samples=10_000, seed=seed)
            assert math.fsum(sigma) == 1.0
            assert sum(sigma) == 1.0

    def test_shift_invariance_bit_identical(self):
        base = [(-2.0, 1.0), (-1.0, 2.0), (0.5, 0.7)]
        ref = prob_optimal(base, samples=50_000, seed=23)
        for shift in (-5.0, 0.25, 3.0, 1e3):
            shifted = prob_optimal([(m + shift, s) for m, s in base], samples=50_000, seed=23)
            assert shifted == ref

    def test_deterministic_per_seed(self):
        a = prob_optimal([(-1.0, 1.0), (0.0, 1.0)], samples=10_000, seed=9)
        b = prob_optimal([(-1.0, 1.0), (0.0, 1.0)], samples=10_000, seed=9)
        assert a == b

    def test_rejects_single_candidate(self):
        with pytest.raises(ValidationError):
            prob_optimal([(-1.0, 1.0)])

    def test_rejects_nonpositive_sd(self):
        with pytest.raises(ValidationError):
            prob_optimal([(-1.0, 1.0), (0.0, 0.0)])

    def test_rejects_too_few_samples(self):
        with pytest.raises(ValidationError):
            prob_optimal([(-1.0, 1.0), (0.0, 1.0)], samples=10)


class TestRankCandidates:
    def test_demo_sigmas_near_published_values(self, demo_model, demo_profile):
        cands = rank_candidates(demo_model, demo_profile, samples=100_000, seed=7)
        sigma = {c.intervention_id: c.sigma for c in cands}
        assert sigma["magnesium"] == pytest.approx(0.30, abs=0.02)
        assert sigma["sleep_regularity"] == pytest.approx(0.32, abs=0.02)
        assert sigma["propranolol"] == pytest.approx(0.15, abs=0.02)
        assert sigma["caffeine_reduction"] == pytest.approx(0.23, abs=0.02)
        assert math.fsum(sigma.values()) == 1.0

    def test_single_intervention_gets_sigma_one(self):
        model = make_model({"only": {"mean": -1.0, "sd": 1.0}})
        cands = rank_candidates(model, make_profile())
        assert cands[0].sigma == 1.0


class TestProfileValidation:
    def test_negative_baseline_rate_rejected(self):
        with pytest.raises(ValidationError):
            make_profile({"baseline_rate": -1.0})

    def test_roundtrip(self, demo_profile):
        assert PatientProfile.from_dict(demo_profile.to_dict()) == demo_profile

    def test_model_roundtrip(self, demo_model):
        assert PriorModel.from_dict(demo_model.to_dict()) == demo_model


def test_flat_efficacy_transform_rejected():
    with pytest.raises(ValidationError):
        EfficacyTransform(slope=0.0)
