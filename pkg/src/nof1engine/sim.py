"""Virtual-patient simulator and policy-comparison harness.

Ground truth is a population of virtual patients with known per-arm effects.
Daily outcomes are Bernoulli events with probability
clamp((baseline + effect) / period_len, 0, 1), so period counts are integers
like the diary data model while inference runs its Gaussian approximation
against that mismatch deliberately. Three selection policies are compared:

* prior_only  -- recommend the population prior's top candidate, no trial
* hybrid      -- trigger policy decides; triggered trials run to completion
                 and the posterior picks the arm
* oracle      -- picks the true best option (including "none"), no cost

Everything is a pure function of (config, seed): per-patient and
per-replicate streams are derived through SeedSequence spawning.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from . import data as _data
from .errors import ValidationError
from .inference import PosteriorState, posterior_prob_optimal, thompson_next_arm, update_posterior
from .priors import PatientProfile, PriorModel, predict_candidates, rank_candidates
from .trial import (
    INTERVENTION,
    OutcomeRecord,
    TrialDesign,
    TrialState,
    design_trial,
    extend_adaptive,
    ingest_outcome,
    period_summary,
)
from .trigger import DecisionKind, TriggerPolicy, decide

POLICY_PRIOR_ONLY = "prior_only"
POLICY_HYBRID = "hybrid"
POLICY_ORACLE = "oracle"
POLICIES = (POLICY_PRIOR_ONLY, POLICY_HYBRID, POLICY_ORACLE)

NO_INTERVENTION = "none"


@dataclass(frozen=True)
class VirtualPatient:
    """Ground-truth patient for simulation; effects on the event-days-per-period scale."""

    patient_id: str
    true_effects: dict[str, float]
    baseline_rate: float
    residual_sd: float
    adherence: float = 1.0
    cohort: str = "main"

    def __post_init__(self):
        if self.baseline_rate < 0:
            raise ValidationError("baseline_rate must be >= 0", field="baseline_rate")
        if not 0.0 < self.adherence <= 1.0:
            raise ValidationError("adherence must be in (0, 1]", field="adherence")

    def effect_of(self, selection: str | None) -> float:
        if selection is None or selection == NO_INTERVENTION or selection == "placebo":
            return 0.0
        return self.true_effects[selection]

    def best_effect(self) -> float:
        return min(0.0, *self.true_effects.values())

    def profile(self) -> PatientProfile:
        return PatientProfile(
            patient_id=self.patient_id, covariates={"baseline_rate": self.baseline_rate}
        )


@dataclass(frozen=True)
class PopulationSpec:
    """Population generator: per-arm means, between-patient heterogeneity, cohort shifts."""

    arm_means: dict[str, float]
    heterogeneity_sd: float
    n_patients: int
    seed: int
    baseline_rate: float = 5.6
    residual_sd: float = 1.5
    adherence: float = 1.0
    cohort_offsets: dict[str, dict[str, float]] = field(default_factory=lambda: {"main": {}})

    def __post_init__(self):
        if self.heterogeneity_sd < 0:
            raise ValidationError("heterogeneity_sd must be >= 0", field="heterogeneity_sd")
        if self.n_patients < 1:
            raise ValidationError("n_patients must be >= 1", field="n_patients")


def sample_population(spec: PopulationSpec) -> list[VirtualPatient]:
    """Draw per-arm true effects ~ Normal(mean + cohort offset, heterogeneity sd).

    Cohorts are assigned round-robin in the declared order. Deterministic per seed.
    """
    rng = np.random.default_rng(spec.seed)
    cohorts = list(spec.cohort_offsets)
    patients = []
    for i in range(spec.n_patients):
        cohort = cohorts[i % len(cohorts)]
        offsets = spec.cohort_offsets[cohort]
        effects = {
            arm: float(rng.normal(mean + offsets.get(arm, 0.0), spec.heterogeneity_sd))
            for arm, mean in spec.arm_means.items()
        }
        patients.append(
            VirtualPatient(
                patient_id=f"vp{i:05d}",
                true_effects=effects,
                baseline_rate=spec.baseline_rate,
                residual_sd=spec.residual_sd,
                adherence=spec.adherence,
                cohort=cohort,
            )
        )
    return patients


def prior_model_from_spec(spec: PopulationSpec, sd_floor: float = 0.05) -> PriorModel:
    """Honest population prior: arm means as prior means, heterogeneity as prior sd."""
    from .priors import EfficacyTransform, InterventionPrior

    return PriorModel(
        interventions={
            arm: InterventionPrior(mean=mean, sd=max(spec.heterogeneity_sd, sd_floor))
            for arm, mean in spec.arm_means.items()
        },
        residual_sd=spec.residual_sd,
        efficacy=EfficacyTransform(),
    )


@dataclass(frozen=True)
class SimConfig:
    """Trial-execution settings shared by all simulated policies."""

    n_periods: int = 6
    period_len_days: int = 14
    baseline_periods: int = 1
    washout_days: int = 0
    adaptive: bool = False
    horizon_periods: int = 26
    sigma_samples: int = 20_000
    prior_sd_floor: float = 0.05
    trigger: TriggerPolicy = TriggerPolicy()


@dataclass(frozen=True)
class PolicyRun:
    """One patient under one policy: selection, accounting, and the outcome trace."""

    policy: str
    patient_id: str
    selected: str | None
    correct: bool
    mean_outcome: float  # realized event-days per period over the horizon
    regret: float  # vs. the oracle's expected outcome, same horizon
    decision_kind: str | None
    trial_periods: int
    trial_days: int
    trial_event_days: int


def _daily_event_prob(baseline_rate: float, effect: float, period_len: int) -> float:
    return min(1.0, max(0.0, (baseline_rate + effect) / period_len))


def _expected_event_days(patient: VirtualPatient, selection: str | None, period_len: int) -> float:
    p = _daily_event_prob(patient.baseline_rate, patient.effect_of(selection), period_len)
    return p * period_len


def simulate_trial(
    patient: VirtualPatient,
    arms: Sequence[str],
    model: PriorModel,
    config: SimConfig,
    seed: int,
) -> tuple[TrialState, PosteriorState, int]:
    """Run one simulated trial end to end; returns (state, posterior, event-day total).

    Non-adherent days are physically real (their events count toward the
    realized total) but produce no diary record, so inference sees them as
    missing. In adaptive mode the first block covers every arm once and
    later periods are assigned by sampling the running posterior.
    """
    seq = np.random.SeedSequence(seed)
    rng = np.random.default_rng(seq.spawn(1)[0])
    design_seed = int(np.random.default_rng(seq.spawn(1)[0]).integers(0, 2**31))
    design = TrialDesign(
        arms=tuple(arms),
        n_periods=config.n_periods,
        period_len_days=config.period_len_days,
        baseline_periods=config.baseline_periods,
        washout_days=config.washout_days,
        adaptive=config.adaptive,
        seed=design_seed,
    )
    state = TrialState(trial_id=f"sim-{patient.patient_id}", design=design)
    priors = {a: (model.interventions[a].mean, model.interventions[a].sd) for a in arms if a != "placebo"}
    total_events = 0

    phase_idx = 0
    thompson_round = 0
    while True:
        phases = state.schedule.phases
        if phase_idx >= len(phases):
            if not design.adaptive or len(state.schedule.intervention_phases()) >= design.n_periods:
                break
            posterior = update_posterior(
                priors,
                model.residual_sd,
                period_summary(state),
                period_len_days=config.period_len_days,
            )
            arm_seed = int(np.random.default_rng(seq.spawn(1)[0]).integers(0, 2**31))
            next_arm = thompson_next_arm(posterior, seed=arm_seed + thompson_round)
            thompson_round += 1
            state.schedule = extend_adaptive(state.schedule, design, next_arm)
            continue
        phase = phases[phase_idx]
        effect = patient.true_effects.get(phase.arm, 0.0) if phase.kind == INTERVENTION else 0.0
        p = _daily_event_prob(patient.baseline_rate, effect, config.period_len_days)
        for day in range(phase.start_day, phase.end_day + 1):
            event = bool(rng.random() < p)
            total_events += int(event)
            if rng.random() < patient.adherence and state.active:
                ingest_outcome(
                    state,
                    OutcomeRecord(trial_id=state.trial_id, day=day, primary_event=event),
                )
        phase_idx += 1

    if state.active:
        state.mark_completed()
    posterior = update_posterior(
        priors,
        model.residual_sd,
        period_summary(state),
        period_len_days=config.period_len_days,
    )
    return state, posterior, total_events


def run_policy(
    patient: VirtualPatient,
    policy: str,
    model: PriorModel,
    config: SimConfig,
    seed: int,
) -> PolicyRun:
    """Select an intervention for one patient under one policy and account its cost.

    The horizon covers `config.horizon_periods`; a hybrid trial's own periods
    (with whatever outcomes they realized, placebo and all) are charged
    against the same horizon.
    """
    if policy not in POLICIES:
        raise ValidationError(f"unknown policy {policy!r}", field="policy")
    period_len = config.period_len_days
    horizon_days = config.horizon_periods * period_len
    oracle_mean = _expected_event_days(
        patient, min(patient.true_effects, key=lambda a: patient.true_effects[a]), period_len
    )
    oracle_mean = min(oracle_mean, _expected_event_days(patient, None, period_len))

    selected: str | None
    decision_kind = None
    trial_days = 0
    trial_events = 0
    trial_periods = 0

    if policy == POLICY_ORACLE:
        best = min(patient.true_effects, key=lambda a: patient.true_effects[a])
        selected = best if patient.true_effects[best] < 0 else None
    elif policy == POLICY_PRIOR_ONLY:
        selected = predict_candidates(model, patient.profile())[0].intervention_id
    else:
        seq = np.random.SeedSequence(seed)
        sigma_seed = int(np.random.default_rng(seq.spawn(1)[0]).integers(0, 2**31))
        candidates = rank_candidates(model, patient.profile(), config.sigma_samples, sigma_seed)
        decision = decide(candidates, config.trigger, patient.profile())
        decision_kind = decision.kind.value
        if decision.kind is DecisionKind.DIRECT_RECOMMEND:
            selected = decision.intervention_id
        elif decision.kind is DecisionKind.NO_ACTION:
            selected = None
        else:
            trial_seed = int(np.random.default_rng(seq.spawn(1)[0]).integers(0, 2**31))
            state, posterior, trial_events = simulate_trial(
                patient, decision.trial_arms, model, config, trial_seed
            )
            post_seed = int(np.random.default_rng(seq.spawn(1)[0]).integers(0, 2**31))
            sigmas = posterior_prob_optimal(posterior, samples=config.sigma_samples, seed=post_seed)
            winner = max(sigmas, key=sigmas.get)
            selected = None if winner == "placebo" else winner
            trial_days = state.schedule.last_day
            trial_periods = len(state.schedule.intervention_phases()) + state.design.baseline_periods
            if trial_days > horizon_days:
                raise ValidationError(
                    "horizon_periods too short to contain the trial", field="horizon_periods"
                )

    expected = _expected_event_days(patient, selected, period_len)
    remaining_days = horizon_days - trial_days
    total_events = trial_events + expected / period_len * remaining_days
    mean_outcome = total_events / config.horizon_periods

    best_effect = patient.best_effect()
    chosen_effect = patient.effect_of(selected)
    correct = chosen_effect <= best_effect + 1e-12
    return PolicyRun(
        policy=policy,
        patient_id=patient.patient_id,
        selected=selected,
        correct=correct,
        mean_outcome=mean_outcome,
        regret=mean_outcome - oracle_mean,
        decision_kind=decision_kind,
        trial_periods=trial_periods,
        trial_days=trial_days,
        trial_event_days=trial_events,
    )


@dataclass(frozen=True)
class PolicyResult:
    policy: str
    n_patients: int
    correct_selection_rate: float
    rate_ci95: tuple[float, float]
    mean_outcome: float
    outcome_ci95: tuple[float, float]
    mean_regret: float
    trials_run: int
    total_trial_periods: int

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "n_patients": self.n_patients,
            "correct_selection_rate": self.correct_selection_rate,
            "rate_ci95": list(self.rate_ci95),
            "mean_outcome": self.mean_outcome,
            "outcome_ci95": list(self.outcome_ci95),
            "mean_regret": self.mean_regret,
            "trials_run": self.trials_run,
            "total_trial_periods": self.total_trial_periods,
        }


@dataclass(frozen=True)
class ComparisonResult:
    policies: dict[str, PolicyResult]
    rate_difference_ci95: dict[str, tuple[float, float]]  # "a-b" -> CI of rate(a) - rate(b)
    bootstrap_resamples: int

    def to_dict(self) -> dict:
        return {
            "policies": {name: r.to_dict() for name, r in self.policies.items()},
            "rate_difference_ci95": {k: list(v) for k, v in self.rate_difference_ci95.items()},
            "bootstrap_resamples": self.bootstrap_resamples,
        }

    def to_rows(self) -> list[dict]:
        return [r.to_dict() | {"rate_ci95": f"{r.rate_ci95[0]:.4f}..{r.rate_ci95[1]:.4f}",
                               "outcome_ci95": f"{r.outcome_ci95[0]:.4f}..{r.outcome_ci95[1]:.4f}"}
                for r in self.policies.values()]


def compare_policies(
    spec: PopulationSpec,
    policies: Sequence[str] = POLICIES,
    config: SimConfig | None = None,
    *,
    bootstrap_resamples: int = 1000,
) -> ComparisonResult:
    """Run every policy over the same sampled population; bootstrap the summaries.

    The bootstrap is paired (the same patient resample is applied to every
    policy), which is what makes the between-policy difference intervals
    meaningful.
    """
    if len(policies) < 2:
        raise ValidationError("compare_policies needs >= 2 policies", field="policies")
    config = config or SimConfig()
    patients = sample_population(spec)
    model = prior_model_from_spec(spec, config.prior_sd_floor)

    seed_root = np.random.SeedSequence([spec.seed, 20_427])
    run_seeds = seed_root.spawn(len(patients))
    runs: dict[str, list[PolicyRun]] = {p: [] for p in policies}
    for patient, pseed in zip(patients, run_seeds):
        children = pseed.spawn(len(policies))
        for policy, cseed in zip(policies, children):
            policy_seed = int(np.random.default_rng(cseed).integers(0, 2**31))
            runs[policy].append(run_policy(patient, policy, model, config, policy_seed))

    n = len(patients)
    boot_rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 77_001]))
    idx = boot_rng.integers(0, n, size=(bootstrap_resamples, n))

    correct = {p: np.array([r.correct for r in runs[p]], dtype=float) for p in policies}
    outcome = {p: np.array([r.mean_outcome for r in runs[p]]) for p in policies}

    def ci(values: np.ndarray) -> tuple[float, float]:
        boots = values[idx].mean(axis=1)
        return float(np.quantile(boots, 0.025)), float(np.quantile(boots, 0.975))

    results = {}
    for p in policies:
        rs = runs[p]
        results[p] = PolicyResult(
            policy=p,
            n_patients=n,
            correct_selection_rate=float(correct[p].mean()),
            rate_ci95=ci(correct[p]),
            mean_outcome=float(outcome[p].mean()),
            outcome_ci95=ci(outcome[p]),
            mean_regret=float(np.mean([r.regret for r in rs])),
            trials_run=sum(1 for r in rs if r.trial_periods > 0),
            total_trial_periods=sum(r.trial_periods for r in rs),
        )

    diffs = {}
    for a in policies:
        for b in policies:
            if a == b:
                continue
            boots = (correct[a][idx] - correct[b][idx]).mean(axis=1)
            diffs[f"{a}-{b}"] = (float(np.quantile(boots, 0.025)), float(np.quantile(boots, 0.975)))

    return ComparisonResult(
        policies=results, rate_difference_ci95=diffs, bootstrap_resamples=bootstrap_resamples
    )


@dataclass(frozen=True)
class CaseStudyConfig:
    """Constructed chronic-migraine scenario; all values are simulation inputs,
    not estimates from any real cohort."""

    true_effects: dict[str, float] = field(
        default_factory=lambda: {"magnesium": -3.0, "sleep_regularity": -1.5}
    )
    baseline_rate: float = 5.6  # 12 event-days/month on 14-day periods
    sigma_y: float = 1.5
    n_periods: int = 6
    period_len_days: int = 14
    baseline_periods: int = 1
    washout_days: int = 0
    sigma_samples: int = 100_000
    delta_per_month: float = 2.0
    trigger: TriggerPolicy = TriggerPolicy()

    @classmethod
    def from_dict(cls, d: Mapping) -> "CaseStudyConfig":
        kwargs = {}
        for key in (
            "baseline_rate",
            "sigma_y",
            "delta_per_month",
        ):
            if key in d:
                kwargs[key] = float(d[key])
        for key in ("n_periods", "period_len_days", "baseline_periods", "washout_days", "sigma_samples"):
            if key in d:
                kwargs[key] = int(d[key])
        if "true_effects" in d:
            kwargs["true_effects"] = {k: float(v) for k, v in d["true_effects"].items()}
        if "trigger" in d:
            kwargs["trigger"] = TriggerPolicy.from_dict(d["trigger"])
        return cls(**kwargs)


@dataclass
class CaseStudyResult:
    arms: tuple[str, ...]
    probabilities: dict[str, list[float]]  # arm -> P(reduction >= delta) per replicate
    decisions: list[dict]
    n_replicates: int
    delta_per_month: float

    def fraction(self, arm: str, lo: float = 0.0, hi: float = 1.0) -> float:
        values = self.probabilities[arm]
        return sum(1 for v in values if lo <= v <= hi) / len(values)

    def quantiles(self, arm: str, qs: Sequence[float] = (0.1, 0.5, 0.9)) -> list[float]:
        return [float(q) for q in np.quantile(self.probabilities[arm], qs)]

    def validate_sets(self) -> list[tuple[str, ...]]:
        return [tuple(d["validate_arms"]) for d in self.decisions]

    def to_rows(self) -> list[dict]:
        rows = []
        for arm in self.arms:
            q10, q50, q90 = self.quantiles(arm)
            rows.append(
                {
                    "arm": arm,
                    "prob_q10": q10,
                    "prob_q50": q50,
                    "prob_q90": q90,
                    "frac_ge_0.8": self.fraction(arm, lo=0.8),
                    "frac_lt_0.5": self.fraction(arm, hi=0.4999999999),
                    "n_replicates": self.n_replicates,
                    "delta_per_month": self.delta_per_month,
                }
            )
        return rows


def replicate_case_study(
    config: CaseStudyConfig | None = None,
    n_replicates: int = 200,
    seed: int = 0,
    model: PriorModel | None = None,
    profile: PatientProfile | None = None,
) -> CaseStudyResult:
    """Replicate the full pipeline (rank -> trigger -> trial -> posterior).

    Each replicate re-runs ranking, the trigger decision, a freshly
    randomized trial on the configured ground truth, and the posterior
    update, then records P(reduction >= delta/month) for every trial arm.
    """
    config = config or CaseStudyConfig()
    model = model or _data.demo_prior_model()
    profile = profile or _data.demo_profile()
    patient = VirtualPatient(
        patient_id=profile.patient_id,
        true_effects=dict(config.true_effects),
        baseline_rate=config.baseline_rate,
        residual_sd=config.sigma_y,
    )
    sim_cfg = SimConfig(
        n_periods=config.n_periods,
        period_len_days=config.period_len_days,
        baseline_periods=config.baseline_periods,
        washout_days=config.washout_days,
        sigma_samples=config.sigma_samples,
        trigger=config.trigger,
    )
    model = replace(model, residual_sd=config.sigma_y)

    seeds = np.random.SeedSequence([seed, 9_041]).spawn(n_replicates)
    probabilities: dict[str, list[float]] = {}
    decisions = []
    arms_seen: tuple[str, ...] = ()
    from .inference import EffectQuery, prob_effect_at_least

    for rep_seed in seeds:
        children = rep_seed.spawn(2)
        sigma_seed = int(np.random.default_rng(children[0]).integers(0, 2**31))
        candidates = rank_candidates(model, profile, config.sigma_samples, sigma_seed)
        decision = decide(candidates, config.trigger, profile)
        decisions.append(decision.to_dict())
        if decision.kind is not DecisionKind.VALIDATE:
            continue
        arms = decision.trial_arms
        arms_seen = arms
        trial_seed = int(np.random.default_rng(children[1]).integers(0, 2**31))
        _, posterior, _ = simulate_trial(patient, arms, model, sim_cfg, trial_seed)
        for arm in arms:
            p = prob_effect_at_least(
                posterior, EffectQuery(arm=arm, delta=config.delta_per_month, per="month")
            )
            probabilities.setdefault(arm, []).append(p)

    return CaseStudyResult(
        arms=arms_seen,
        probabilities=probabilities,
        decisions=decisions,
        n_replicates=n_replicates,
        delta_per_month=config.delta_per_month,
    )


def mann_whitney_auc(labels: Sequence[bool], scores: Sequence[float]) -> float:
    """Rank-statistic AUC with ties averaged."""
    y = np.asarray(labels, dtype=bool)
    s = np.asarray(scores, dtype=float)
    n1 = int(y.sum())
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        raise ValidationError("AUC undefined: only one class present", field="labels")
    ranks = rankdata(s)
    u = float(ranks[y].sum()) - n1 * (n1 + 1) / 2.0
    return u / (n1 * n0)


@dataclass(frozen=True)
class GeneralizabilityConfig:
    """Two-cohort spurious-correlation construction.

    In cohort A a feature tracks responder status with strength
    `spurious_coupling`; in cohort B that coupling is scaled by
    (1 - cohort_shift), so shift 1 removes it entirely and shift 0 makes the
    cohorts exchangeable.
    """

    n_per_cohort: int = 400
    effect_mean: float = -1.5
    effect_sd: float = 2.0
    responder_threshold: float = -2.0
    spurious_coupling: float = 1.2
    cohort_shift: float = 1.0
    n_noise_features: int = 3
    small_n_threshold: int = 100

    @classmethod
    def from_dict(cls, d: Mapping) -> "GeneralizabilityConfig":
        kwargs = {}
        for key in ("effect_mean", "effect_sd", "responder_threshold", "spurious_coupling", "cohort_shift"):
            if key in d:
                kwargs[key] = float(d[key])
        for key in ("n_per_cohort", "n_noise_features", "small_n_threshold"):
            if key in d:
                kwargs[key] = int(d[key])
        return cls(**kwargs)


@dataclass(frozen=True)
class GeneralizabilityResult:
    within_cohort_auc: float
    cross_cohort_auc: float
    n_train: int
    n_within_test: int
    n_cross: int
    flags: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "within_cohort_auc": self.within_cohort_auc,
            "cross_cohort_auc": self.cross_cohort_auc,
            "n_train": self.n_train,
            "n_within_test": self.n_within_test,
            "n_cross": self.n_cross,
            "flags": list(self.flags),
        }

    def to_rows(self) -> list[dict]:
        return [
            {"cohort": "within (held-out)", "auc": self.within_cohort_auc, "n": self.n_within_test},
            {"cohort": "cross (independent)", "auc": self.cross_cohort_auc, "n": self.n_cross},
        ]


def _cohort_features(
    config: GeneralizabilityConfig, coupling: float, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    effects = rng.normal(config.effect_mean, config.effect_sd, size=n)
    responders = effects <= config.responder_threshold
    spur = coupling * responders + rng.standard_normal(n)
    noise = rng.standard_normal((n, config.n_noise_features))
    X = np.column_stack([np.ones(n), spur, noise])
    return X, responders


def generalizability_scenario(
    config: GeneralizabilityConfig | None = None, seed: int = 0
) -> GeneralizabilityResult:
    """Fit a linear responder score on cohort A; evaluate held-out A and cohort B.

    The score latches onto the cohort-A-only spurious feature, so within-cohort
    AUC is strong while cross-cohort AUC collapses toward chance.
    """
    config = config or GeneralizabilityConfig()
    rng = np.random.default_rng(np.random.SeedSequence([seed, 31_337]))
    n = config.n_per_cohort
    X_a, y_a = _cohort_features(config, config.spurious_coupling, n, rng)
    X_b, y_b = _cohort_features(
        config, config.spurious_coupling * (1.0 - config.cohort_shift), n, rng
    )
    half = n // 2
    weights, *_ = np.linalg.lstsq(X_a[:half], y_a[:half].astype(float), rcond=None)
    within = mann_whitney_auc(y_a[half:], X_a[half:] @ weights)
    cross = mann_whitney_auc(y_b, X_b @ weights)
    flags = []
    if n < config.small_n_threshold:
        flags.append("wide confidence interval: small cohort")
    return GeneralizabilityResult(
        within_cohort_auc=within,
        cross_cohort_auc=cross,
        n_train=half,
        n_within_test=n - half,
        n_cross=n,
        flags=tuple(flags),
    )
