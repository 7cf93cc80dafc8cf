"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
with its runtime against the stated budget. Run with -s to see the lines live:

    pytest tests/test_acceptance.py -v -s
"""

import itertools
import time
from contextlib import contextmanager

import numpy as np
import pytest

from grid_oracle import grid_posterior
from nof1engine import data
from nof1engine.inference import Gaussian, update_posterior
from nof1engine.priors import prob_optimal, two_candidate_prob_best
from nof1engine.privacy import (
    PrivacyBudget,
    clip_and_noise,
    encode_fixed_point,
    gaussian_mechanism_sd,
)
from nof1engine.service.config import ServiceConfig
from nof1engine.service.engine import Engine
from nof1engine.sim import (
    PopulationSpec,
    SimConfig,
    compare_policies,
    generalizability_scenario,
    replicate_case_study,
)
from nof1engine.trial import (
    OutcomeRecord,
    StoppingRule,
    TrialDesign,
    TrialState,
    design_trial,
    ingest_outcome,
)
from nof1engine.trigger import DecisionKind, TriggerPolicy, decide
from synth import conjugacy_config
from test_privacy import masked_round


@contextmanager
def criterion(num: int, budget_s: float, text: str):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        elapsed = time.perf_counter() - start
        print(f"[ACCEPTANCE {num:02d}] FAIL  ({elapsed:6.1f}s / {budget_s:g}s budget)  {text}")
        raise
    elapsed = time.perf_counter() - start
    print(f"[ACCEPTANCE {num:02d}] PASS  ({elapsed:6.1f}s / {budget_s:g}s budget)  {text}")
    assert elapsed < budget_s, f"time budget exceeded: {elapsed:.1f}s >= {budget_s}s"


def test_criterion_01_fixture_trigger_reproduction():
    with criterion(1, 1.0, "published fixture: tau=0.25 validates exactly {magnesium, sleep_regularity}"):
        candidates = data.demo_candidates()
        assert [c.sigma for c in candidates] == [0.30, 0.32, 0.15, 0.23]
        decision = decide(candidates, TriggerPolicy(), data.demo_profile())
        assert decision.kind is DecisionKind.VALIDATE
        assert tuple(decision.validate_arms) == ("magnesium", "sleep_regularity")
        excluded = {"propranolol", "caffeine_reduction"}
        assert excluded.isdisjoint(decision.validate_arms)


def test_criterion_02_probability_optimal_correctness():
    with criterion(2, 10.0, "two-candidate Monte Carlo sigma matches the closed form within 0.01 on a 5x5 grid"):
        for i, dmu in enumerate((0.0, 0.5, 1.0, 1.5, 2.0)):
            for j, s in enumerate((0.5, 1.0, 1.5, 2.0, 3.0)):
                sigma = prob_optimal([(-dmu, s), (0.0, s)], samples=100_000, seed=100 + 10 * i + j)
                expected = two_candidate_prob_best(-dmu, s, 0.0, s)
                assert abs(sigma[0] - expected) <= 0.01, (dmu, s, sigma[0], expected)


def test_criterion_03_conjugacy_against_grid_oracle():
    with criterion(3, 60.0, "posterior matches brute-force grid integration (27 configs, <=3 arms, <=8 periods, 1e-4 rel)"):
        for n_arms in (1, 2, 3):
            for n_periods in range(9):
                priors, sigma_y, summaries = conjugacy_config(n_arms, n_periods)
                post = update_posterior(priors, sigma_y, summaries, period_len_days=14)
                oracle = grid_posterior(priors, sigma_y, summaries)
                for arm in priors:
                    for got, want in (
                        (post.effects[arm].mean, oracle[arm][0]),
                        (post.effects[arm].sd, oracle[arm][1]),
                    ):
                        assert abs(got - want) <= 1e-4 * max(1.0, abs(want)), (
                            n_arms,
                            n_periods,
                            arm,
                            got,
                            want,
                        )


def test_criterion_04_zero_data_identity():
    with criterion(4, 1.0, "posterior with no summaries equals the prior exactly"):
        priors = {"a": (-3.2, 1.1), "b": (-2.8, 2.4), "c": (-2.1, 2.6)}
        post = update_posterior(priors, 1.5, [], period_len_days=14)
        for arm, (mean, sd) in priors.items():
            assert post.effects[arm] == Gaussian(mean, sd)


def test_criterion_05_randomization_invariants():
    with criterion(5, 5.0, "1000 seeded 3-arm/6-period schedules satisfy block and count invariants deterministically"):
        arms = ("A", "B", "C")
        for seed in range(1000):
            design = TrialDesign(arms=arms, n_periods=6, seed=seed)
            schedule = design_trial(design)
            seq = schedule.arm_sequence()
            assert sorted(seq[:3]) == sorted(arms)
            assert sorted(seq[3:]) == sorted(arms)
            assert all(seq.count(a) == 2 for a in arms)
            assert design_trial(design) == schedule


def test_criterion_06_case_study_qualitative_reproduction():
    with criterion(
        6,
        120.0,
        "constructed case study: P(reduction >= 2/month) for magnesium >= 0.8 in >= 80% of 200 "
        "replicates; placebo < 0.5 in >= 95%",
    ):
        result = replicate_case_study(n_replicates=200, seed=7)
        for decision in result.decisions:
            assert decision["kind"] == "validate"
            assert set(decision["validate_arms"]) == {"magnesium", "sleep_regularity"}
        assert result.fraction("magnesium", lo=0.8) >= 0.80
        assert result.fraction("placebo", hi=0.4999999) >= 0.95


def test_criterion_07_generalizability_paradox_demo():
    with criterion(7, 60.0, "two-cohort shift: within-cohort AUC >= 0.65 and cross-cohort AUC <= 0.55"):
        result = generalizability_scenario(seed=11)
        assert result.within_cohort_auc >= 0.65, result
        assert result.cross_cohort_auc <= 0.55, result


def test_criterion_08_dp_calibration_and_budget():
    with criterion(
        8, 30.0, "gaussian-mechanism noise sd within 5% of analytic over a 3x3x2 grid; overspend refused"
    ):
        for eps in (0.5, 1.0, 2.0):
            for delta in (1e-6, 1e-5, 1e-4):
                for clip in (0.5, 2.0):
                    draws = np.array(
                        [
                            clip_and_noise(
                                "x",
                                0.0,
                                eps,
                                delta,
                                PrivacyBudget(epsilon=10.0, delta=1e-3, clip=clip),
                                seed=s,
                            ).estimate
                            for s in range(10_000)
                        ]
                    )
                    expected = gaussian_mechanism_sd(eps, delta, clip)
                    assert abs(float(np.std(draws)) - expected) <= 0.05 * expected
        budget = PrivacyBudget(epsilon=1.0, delta=1e-4, clip=1.0)
        clip_and_noise("x", 0.0, 1.0, 1e-5, budget, seed=0)
        from nof1engine.errors import BudgetExhaustedError

        ledger = list(budget.spent)
        with pytest.raises(BudgetExhaustedError):
            clip_and_noise("x", 0.0, 0.1, 1e-5, budget, seed=1)
        assert budget.spent == ledger


def test_criterion_09_secure_aggregation_exactness():
    with criterion(9, 10.0, "unmasked sum equals the plaintext fixed-point sum bit-exactly (n in {1,2,3,8,32}, 100 seeds)"):
        from nof1engine.privacy import unmask_sum

        for n in (1, 2, 3, 8, 32):
            for seed in range(100):
                rng = np.random.default_rng(seed + 7919 * n)
                values = {f"c{i:02d}": list(rng.uniform(-50, 50, size=2)) for i in range(n)}
                shares = masked_round(values, seed=seed)
                expected = np.sum([encode_fixed_point(v) for v in values.values()], axis=0)
                assert unmask_sum(shares) == [int(v) / 10**6 for v in expected]


def test_criterion_10_policy_comparison_property():
    with criterion(
        10,
        180.0,
        "heterogeneity 2: hybrid beats prior_only with bootstrap CI excluding 0 (2000 patients); "
        "heterogeneity 0: indistinguishable",
    ):
        config = SimConfig(sigma_samples=20_000)
        spec_hi = PopulationSpec(
            arm_means={"treatment_a": -2.0, "treatment_b": -1.5, "treatment_c": -1.0},
            heterogeneity_sd=2.0,
            n_patients=2000,
            seed=42,
        )
        hi = compare_policies(spec_hi, ("prior_only", "hybrid", "oracle"), config)
        lo_diff, _ = hi.rate_difference_ci95["hybrid-prior_only"]
        assert lo_diff > 0.0, hi.rate_difference_ci95
        assert hi.policies["oracle"].mean_outcome <= hi.policies["hybrid"].mean_outcome + 1e-9

        spec_zero = PopulationSpec(
            arm_means={"treatment_a": -2.0, "treatment_b": -1.5, "treatment_c": -1.0},
            heterogeneity_sd=0.0,
            n_patients=2000,
            seed=42,
        )
        zero = compare_policies(spec_zero, ("prior_only", "hybrid"), config)
        lo0, hi0 = zero.rate_difference_ci95["hybrid-prior_only"]
        assert lo0 <= 0.0 <= hi0


def test_criterion_11_crash_replay_equivalence(tmp_path):
    with criterion(11, 60.0, "random >=200-command sequences replay to identical state after kill-and-restart"):
        config = ServiceConfig(mode="device", data_dir=tmp_path / "replay", snapshot_every=0)
        engine = Engine(config)
        rng = np.random.default_rng(4242)
        profile = data.demo_profile().to_dict()
        engine.register_patient(profile)
        trial_ids = []
        commands = 1
        while commands < 220:
            action = rng.integers(0, 10)
            commands += 1
            try:
                if action <= 1 or not trial_ids:
                    trial = engine.create_trial(
                        {
                            "patient_id": profile["patient_id"],
                            "design": {
                                "arms": ["magnesium", "sleep_regularity", "placebo"],
                                "n_periods": 3,
                                "period_len_days": int(rng.integers(2, 5)),
                                "seed": int(rng.integers(0, 1000)),
                            },
                        }
                    )
                    trial_ids.append(trial["trial_id"])
                elif action == 2:
                    engine.register_patient(
                        {"patient_id": f"p{int(rng.integers(0, 5))}", "consent_aggregate": True}
                    )
                else:
                    trial_id = trial_ids[int(rng.integers(0, len(trial_ids)))]
                    engine.ingest(
                        trial_id,
                        {
                            "record": {
                                "day": int(rng.integers(1, 25)),
                                "primary_event": bool(rng.random() < 0.4),
                                "pain": int(rng.integers(0, 11)),
                                "source": "self_report" if rng.random() < 0.8 else "wearable",
                            },
                            "idempotency_key": f"k{int(rng.integers(0, 50))}" if rng.random() < 0.3 else None,
                        },
                    )
            except Exception:
                pass  # rejected commands must leave no partial state behind
        assert commands >= 200
        replayed = Engine(config)
        assert replayed.state.to_dict() == engine.state.to_dict()


def test_criterion_12_stopping_rule_conformance():
    with criterion(12, 5.0, "terminate fires exactly per the consecutive-days rule (exhaustive traces <= 6 days)"):
        rule = StoppingRule(metric="pain", threshold=9, consecutive_days=3, action="terminate")
        design = TrialDesign(
            arms=("a", "b"), n_periods=2, period_len_days=7, seed=1, stopping_rules=(rule,)
        )
        for length in range(1, 7):
            for trace in itertools.product([8, 9], repeat=length):
                expected_stop = None
                for d in range(3, length + 1):
                    if trace[d - 3] >= 9 and trace[d - 2] >= 9 and trace[d - 1] >= 9:
                        expected_stop = d
                        break
                state = TrialState(trial_id="t", design=design)
                actual_stop = None
                for day, pain in enumerate(trace, start=1):
                    if not state.active:
                        break
                    verdict = ingest_outcome(
                        state, OutcomeRecord(trial_id="t", day=day, primary_event=False, pain=pain)
                    )
                    if verdict.kind == "stop":
                        actual_stop = day
                        break
                assert actual_stop == expected_stop, trace
