"""Bayesian engine: per-arm effect posteriors from period summaries.

Observation model, on the event-days-per-period scale:

    y_period ~ Normal(reference_level + effect(arm), sigma_y^2 * len/observed)

where a partially observed period's count is rescaled to full-period
equivalent (y = event_days * len/observed) and its variance inflated by the
same factor, so sparse periods carry proportionally less weight. Effects are
relative to the reference arm (placebo when present, otherwise the baseline
level); the reference arm's own effect is identically zero. The reference
level gets a diffuse prior centered on the baseline-period mean; per-arm
effects get the population priors. Residual sd sigma_y is treated as known,
so the model is jointly Gaussian and the posterior is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy.stats import norm

from .errors import NotFoundError, StateError, ValidationError
from .priors import _prob_best
from .trial import BASELINE, PeriodSummary, TrialState

DAYS_PER_MONTH = 30.0
REFERENCE_PRIOR_SD_FACTOR = 10.0
Z_95 = float(norm.ppf(0.975))


class Gaussian(NamedTuple):
    mean: float
    sd: float


@dataclass(frozen=True)
class EffectQuery:
    """Ask for P(improvement of at least `delta` event-days) on one arm.

    `per` selects the threshold unit: "month" converts to the period scale at
    30 days/month, "period" uses delta as-is.
    """

    arm: str
    delta: float
    per: str = "month"

    def __post_init__(self):
        if not math.isfinite(self.delta):
            raise ValidationError("delta must be finite", field="delta")
        if self.per not in ("month", "period"):
            raise ValidationError(f"unknown unit {self.per!r}", field="per")


@dataclass(frozen=True)
class PosteriorState:
    """Exact Gaussian posterior over reference level and per-arm effects."""

    reference_arm: str
    arm_order: tuple[str, ...]  # all arms, reference included
    effects: dict[str, Gaussian]  # non-reference arms only
    reference_level: Gaussian
    sigma_y: float
    period_len_days: int
    n_periods_used: dict[str, int] = field(default_factory=dict)
    carryover: Gaussian | None = None

    def __post_init__(self):
        for arm, g in self.effects.items():
            if not g.sd > 0:
                raise ValidationError(f"posterior sd for {arm!r} must be > 0", field=arm)

    def effect(self, arm: str) -> Gaussian:
        """Effect distribution for `arm`; the reference arm is degenerate at zero."""
        if arm == self.reference_arm:
            return Gaussian(0.0, 0.0)
        if arm not in self.effects:
            raise NotFoundError(f"unknown arm {arm!r}", field="arm")
        return self.effects[arm]

    def to_dict(self) -> dict:
        return {
            "reference_arm": self.reference_arm,
            "arm_order": list(self.arm_order),
            "effects": {a: {"mean": g.mean, "sd": g.sd} for a, g in self.effects.items()},
            "reference_level": {"mean": self.reference_level.mean, "sd": self.reference_level.sd},
            "sigma_y": self.sigma_y,
            "period_len_days": self.period_len_days,
            "n_periods_used": dict(self.n_periods_used),
            "carryover": None
            if self.carryover is None
            else {"mean": self.carryover.mean, "sd": self.carryover.sd},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PosteriorState":
        return cls(
            reference_arm=d["reference_arm"],
            arm_order=tuple(d["arm_order"]),
            effects={a: Gaussian(g["mean"], g["sd"]) for a, g in d["effects"].items()},
            reference_level=Gaussian(d["reference_level"]["mean"], d["reference_level"]["sd"]),
            sigma_y=float(d["sigma_y"]),
            period_len_days=int(d["period_len_days"]),
            n_periods_used={a: int(n) for a, n in d.get("n_periods_used", {}).items()},
            carryover=None
            if d.get("carryover") is None
            else Gaussian(d["carryover"]["mean"], d["carryover"]["sd"]),
        )


def _as_gaussian(value) -> Gaussian:
    if isinstance(value, Gaussian):
        return value
    if isinstance(value, Mapping):
        return Gaussian(float(value["mean"]), float(value["sd"]))
    mean, sd = value
    return Gaussian(float(mean), float(sd))


def _carryover_indicator(summary: PeriodSummary, reference_arm: str) -> float:
    prev = summary.previous_arm
    return 1.0 if prev is not None and prev != BASELINE and prev != reference_arm else 0.0


def update_posterior(
    priors: Mapping[str, Gaussian | tuple[float, float]],
    sigma_y: float,
    summaries: Sequence[PeriodSummary],
    *,
    period_len_days: int | None = None,
    reference_arm: str | None = None,
    reference_prior: Gaussian | tuple[float, float] | None = None,
    carryover: bool = False,
    carryover_prior: Gaussian | tuple[float, float] | None = None,
) -> PosteriorState:
    """Exact conjugate update of per-arm effects from period summaries.

    `priors` maps intervention arm -> prior (mean, sd). The reference arm is
    "placebo" when present among the trial arms, otherwise the baseline level
    itself (every prior arm then carries an effect). With zero summaries the
    returned posterior equals the priors exactly. `reference_prior` overrides
    the diffuse default; sd 0 pins the reference level to a known constant.
    """
    if not sigma_y > 0:
        raise ValidationError("sigma_y must be > 0", field="sigma_y")
    priors = {arm: _as_gaussian(g) for arm, g in priors.items()}
    for arm, g in priors.items():
        if not g.sd > 0:
            raise ValidationError(f"prior sd for {arm!r} must be > 0", field=arm)

    summary_arms = [s.arm for s in summaries]
    if reference_arm is None:
        reference_arm = "placebo" if "placebo" in priors or "placebo" in summary_arms else BASELINE
    effect_arms = [a for a in priors if a != reference_arm]
    known = set(effect_arms) | {reference_arm, BASELINE}
    for arm in summary_arms:
        if arm not in known:
            raise ValidationError(f"summary references unknown arm {arm!r}", field="arm")

    if period_len_days is None:
        period_len_days = summaries[0].period_len_days if summaries else 14

    rows = [s for s in summaries if s.n_observed_days > 0]
    n_used: dict[str, int] = {arm: 0 for arm in [reference_arm, *effect_arms]}
    for s in rows:
        arm = reference_arm if s.arm == BASELINE else s.arm
        n_used[arm] = n_used.get(arm, 0) + 1

    if not rows:
        return PosteriorState(
            reference_arm=reference_arm,
            arm_order=(reference_arm, *effect_arms),
            effects={arm: priors[arm] for arm in effect_arms},
            reference_level=_as_gaussian(reference_prior)
            if reference_prior is not None
            else Gaussian(0.0, REFERENCE_PRIOR_SD_FACTOR * sigma_y),
            sigma_y=sigma_y,
            period_len_days=period_len_days,
            n_periods_used=n_used,
            carryover=Gaussian(0.0, sigma_y) if carryover else None,
        )

    scale = np.array([s.period_len_days / s.n_observed_days for s in rows])
    y = np.array([s.event_days for s in rows], dtype=float) * scale
    obs_var = sigma_y**2 * scale

    baseline_ys = [yi for yi, s in zip(y, rows) if s.arm == BASELINE]
    m0 = float(np.mean(baseline_ys)) if baseline_ys else float(np.mean(y))
    ref_prior = (
        _as_gaussian(reference_prior)
        if reference_prior is not None
        else Gaussian(m0, REFERENCE_PRIOR_SD_FACTOR * sigma_y)
    )

    col_of = {arm: j for j, arm in enumerate(effect_arms)}
    n_params = 1 + len(effect_arms) + (1 if carryover else 0)
    X = np.zeros((len(rows), n_params))
    X[:, 0] = 1.0
    for i, s in enumerate(rows):
        if s.arm in col_of:
            X[i, 1 + col_of[s.arm]] = 1.0
        if carryover:
            X[i, -1] = _carryover_indicator(s, reference_arm)

    prior_mean = np.zeros(n_params)
    prior_var = np.zeros(n_params)
    prior_mean[0], prior_var[0] = ref_prior.mean, ref_prior.sd**2
    for arm, j in col_of.items():
        prior_mean[1 + j] = priors[arm].mean
        prior_var[1 + j] = priors[arm].sd ** 2
    if carryover:
        g = _as_gaussian(carryover_prior) if carryover_prior is not None else Gaussian(0.0, sigma_y)
        prior_mean[-1], prior_var[-1] = g.mean, g.sd**2

    # sd 0 on the reference prior means the level is known: condition on it.
    if prior_var[0] == 0.0:
        y = y - ref_prior.mean
        X = X[:, 1:]
        prior_mean_free = prior_mean[1:]
        prior_prec = 1.0 / prior_var[1:]
    else:
        prior_mean_free = prior_mean
        prior_prec = 1.0 / prior_var

    w = 1.0 / obs_var
    precision = np.diag(prior_prec) + X.T @ (X * w[:, None])
    cov = np.linalg.inv(precision)
    mean = cov @ (prior_prec * prior_mean_free + X.T @ (w * y))
    sds = np.sqrt(np.diag(cov))

    if prior_var[0] == 0.0:
        ref_post = Gaussian(ref_prior.mean, 0.0)
        offset = 0
    else:
        ref_post = Gaussian(float(mean[0]), float(sds[0]))
        offset = 1

    effects = {
        arm: Gaussian(float(mean[offset + j]), float(sds[offset + j])) for arm, j in col_of.items()
    }
    carry = Gaussian(float(mean[-1]), float(sds[-1])) if carryover else None

    return PosteriorState(
        reference_arm=reference_arm,
        arm_order=(reference_arm, *effect_arms),
        effects=effects,
        reference_level=ref_post,
        sigma_y=sigma_y,
        period_len_days=period_len_days,
        n_periods_used=n_used,
        carryover=carry,
    )


def fit_carryover(
    priors: Mapping[str, Gaussian | tuple[float, float]],
    sigma_y: float,
    summaries: Sequence[PeriodSummary],
    *,
    period_len_days: int | None = None,
    reference_arm: str | None = None,
    reference_prior: Gaussian | tuple[float, float] | None = None,
) -> PosteriorState:
    """Joint posterior with one shared additive carryover coefficient.

    The extra regressor is the indicator "the previous period ran an active
    (non-reference) arm"; its coefficient gets a N(0, sigma_y) prior. Needs
    at least |arms| + 2 fully observed intervention periods and variation in
    the indicator, otherwise the coefficient is unidentifiable.
    """
    intervention = [s for s in summaries if s.arm != BASELINE and s.fully_observed]
    arms = {s.arm for s in intervention}
    if len(intervention) < len(arms) + 2:
        raise ValidationError(
            f"carryover unidentifiable: {len(intervention)} fully observed periods "
            f"for {len(arms)} arms (need >= {len(arms) + 2})",
            field="summaries",
        )
    ref = reference_arm or ("placebo" if "placebo" in priors or "placebo" in arms else BASELINE)
    indicators = {_carryover_indicator(s, ref) for s in intervention}
    if len(indicators) < 2:
        raise ValidationError("carryover unidentifiable: no arm transition variation", field="summaries")
    return update_posterior(
        priors,
        sigma_y,
        summaries,
        period_len_days=period_len_days,
        reference_arm=reference_arm,
        reference_prior=reference_prior,
        carryover=True,
    )


def prob_effect_at_least(posterior: PosteriorState, query: EffectQuery) -> float:
    """P(effect <= -delta) under the arm's Normal posterior.

    Negative effects are improvements, so this is the posterior probability
    that the arm reduces event-days by at least delta.
    """
    delta_period = (
        query.delta * posterior.period_len_days / DAYS_PER_MONTH if query.per == "month" else query.delta
    )
    g = posterior.effect(query.arm)
    if g.sd == 0.0:
        return 1.0 if g.mean <= -delta_period else 0.0
    return float(norm.cdf((-delta_period - g.mean) / g.sd))


def posterior_prob_optimal(
    posterior: PosteriorState, samples: int = 100_000, seed: int = 0
) -> dict[str, float]:
    """Probability each arm (reference included) is the best, by Monte Carlo.

    Same estimator as the prior-side ranking; the reference arm enters as a
    degenerate draw at zero, so its share is the probability that no active
    arm improves on it.
    """
    arms = posterior.arm_order
    if len(arms) < 2:
        raise ValidationError("prob-optimal needs >= 2 arms", field="posterior")
    gs = [posterior.effect(a) for a in arms]
    probs = _prob_best([g.mean for g in gs], [g.sd for g in gs], samples, seed)
    return dict(zip(arms, probs))


def thompson_next_arm(posterior: PosteriorState, seed: int) -> str:
    """Adaptive allocation: sample each arm's effect once, return the best draw."""
    arms = posterior.arm_order
    if len(arms) < 2:
        raise ValidationError("thompson sampling needs >= 2 arms", field="posterior")
    rng = np.random.default_rng(seed)
    gs = [posterior.effect(a) for a in arms]
    draws = np.array([g.mean for g in gs]) + rng.standard_normal(len(arms)) * np.array(
        [g.sd for g in gs]
    )
    return arms[int(np.argmin(draws))]


@dataclass(frozen=True)
class TrialReport:
    """Interpretable end-of-trial summary; every number traces to stored records."""

    trial_id: str
    status: str
    stop_reason: str | None
    stop_day: int | None
    reference_arm: str
    sigma_y: float
    period_len_days: int
    arms: list[dict]  # per-arm estimates and probability summaries
    schedule: list[dict]
    periods: list[dict]
    missing_days: int
    scheduled_days: int
    observed_days: int
    alerts: list[dict]
    record_count: int
    prob_samples: int
    seed: int
    schema_version: str = "v1"

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "trial_id": self.trial_id,
            "status": self.status,
            "stop_reason": self.stop_reason,
            "stop_day": self.stop_day,
            "reference_arm": self.reference_arm,
            "sigma_y": self.sigma_y,
            "period_len_days": self.period_len_days,
            "arms": self.arms,
            "schedule": self.schedule,
            "periods": self.periods,
            "missing_days": self.missing_days,
            "scheduled_days": self.scheduled_days,
            "observed_days": self.observed_days,
            "alerts": self.alerts,
            "record_count": self.record_count,
            "prob_samples": self.prob_samples,
            "seed": self.seed,
        }

    def arm_rows(self) -> list[dict]:
        """Flat rows for the delimited export."""
        return [
            {
                "trial_id": self.trial_id,
                "arm": row["arm"],
                "n_periods": row["n_periods"],
                "effect_mean": row["effect_mean"],
                "effect_sd": row["effect_sd"],
                "ci95_low": row["ci95_low"],
                "ci95_high": row["ci95_high"],
                "prob_optimal": row["prob_optimal"],
                **{f"prob_reduction_ge_{k}": v for k, v in row["prob_reduction"].items()},
            }
            for row in self.arms
        ]


def generate_report(
    posterior: PosteriorState,
    state: TrialState,
    *,
    deltas_per_month: Sequence[float] = (2.0,),
    samples: int = 100_000,
    seed: int | None = None,
) -> TrialReport:
    """Build the structured end-of-trial report. Deterministic: regenerating
    from the same records and design yields byte-identical JSON (the Monte
    Carlo seed defaults to a value derived from the design seed)."""
    if state.active:
        raise StateError(f"trial {state.trial_id} is still active; report requires completed or stopped")
    if seed is None:
        seed = state.design.seed + 0x5EED
    from .trial import period_summary  # local import avoids cycle at module load

    summaries = period_summary(state)
    sigmas = posterior_prob_optimal(posterior, samples=samples, seed=seed)

    arm_rows = []
    for arm in posterior.arm_order:
        g = posterior.effect(arm)
        probs = {
            f"{delta:g}_per_month": prob_effect_at_least(posterior, EffectQuery(arm=arm, delta=delta))
            for delta in deltas_per_month
        }
        arm_rows.append(
            {
                "arm": arm,
                "is_reference": arm == posterior.reference_arm,
                "n_periods": posterior.n_periods_used.get(arm, 0),
                "effect_mean": g.mean,
                "effect_sd": g.sd,
                "ci95_low": g.mean - Z_95 * g.sd,
                "ci95_high": g.mean + Z_95 * g.sd,
                "prob_optimal": sigmas[arm],
                "prob_reduction": probs,
            }
        )

    scheduled = sum(
        p.end_day - p.start_day + 1 for p in state.schedule.phases if p.kind != "washout"
    )
    observed = sum(s.n_observed_days for s in summaries)
    return TrialReport(
        trial_id=state.trial_id,
        status=state.status,
        stop_reason=state.stop_reason,
        stop_day=state.stop_day,
        reference_arm=posterior.reference_arm,
        sigma_y=posterior.sigma_y,
        period_len_days=posterior.period_len_days,
        arms=arm_rows,
        schedule=[p.to_dict() for p in state.schedule.phases],
        periods=[s.to_dict() for s in summaries],
        missing_days=scheduled - observed,
        scheduled_days=scheduled,
        observed_days=observed,
        alerts=list(state.alerts),
        record_count=len(state.records),
        prob_samples=samples,
        seed=seed,
    )


def empirical_contrasts(summaries: Iterable[PeriodSummary], reference_arm: str) -> dict[str, float]:
    """Raw arm-minus-reference means, the data-domination limit of the posterior."""
    totals: dict[str, list[float]] = {}
    for s in summaries:
        if s.n_observed_days == 0:
            continue
        arm = reference_arm if s.arm == BASELINE else s.arm
        totals.setdefault(arm, []).append(s.event_days * s.period_len_days / s.n_observed_days)
    if reference_arm not in totals:
        raise ValidationError("no reference-arm periods observed", field="summaries")
    ref_mean = float(np.mean(totals[reference_arm]))
    return {
        arm: float(np.mean(vals)) - ref_mean for arm, vals in totals.items() if arm != reference_arm
    }
