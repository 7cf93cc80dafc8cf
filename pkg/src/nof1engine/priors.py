"""Population prior model: ranks intervention candidates for a patient profile.

The model assigns each intervention a Gaussian prior over its effect on the
outcome scale (change in event-days per period versus no intervention,
negative = improvement), optionally adjusted linearly by patient covariates.
A monotone affine transform maps the prior mean to a [0, 1] efficacy score,
and Monte Carlo sampling estimates each candidate's probability of being the
best option overall.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError

Covariate = float | int | bool | str


@dataclass(frozen=True)
class PatientProfile:
    """Patient-side inputs to candidate ranking.

    `covariates` holds named values (e.g. age, sex flags, baseline_rate =
    outcome event-days per period). `contraindicated` holds intervention ids
    that must never be recommended or trialled for this patient; ids are
    exact-match opaque strings.
    """

    patient_id: str
    covariates: dict[str, Covariate] = field(default_factory=dict)
    contraindicated: frozenset[str] = frozenset()
    consent_aggregate: bool = False

    def __post_init__(self):
        if not self.patient_id:
            raise ValidationError("patient_id must be non-empty", field="patient_id")
        rate = self.covariates.get("baseline_rate")
        if rate is not None and isinstance(rate, (int, float)) and rate < 0:
            raise ValidationError("baseline_rate must be >= 0", field="covariates.baseline_rate")
        object.__setattr__(self, "contraindicated", frozenset(self.contraindicated))

    @classmethod
    def from_dict(cls, d: Mapping) -> "PatientProfile":
        return cls(
            patient_id=d["patient_id"],
            covariates=dict(d.get("covariates", {})),
            contraindicated=frozenset(d.get("contraindicated", [])),
            consent_aggregate=bool(d.get("consent_aggregate", False)),
        )

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "covariates": dict(self.covariates),
            "contraindicated": sorted(self.contraindicated),
            "consent_aggregate": self.consent_aggregate,
        }


@dataclass(frozen=True)
class InterventionPrior:
    """Prior effect distribution for one intervention.

    `adjustments` maps covariate name -> additive coefficient on the mean.
    `sd_inflation` maps flag covariate name -> multiplicative factor applied
    to the sd when the flag is truthy (wider uncertainty for groups the
    population data underrepresents).
    """

    mean: float
    sd: float
    risk_tier: int = 1
    adjustments: dict[str, float] = field(default_factory=dict)
    sd_inflation: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.sd > 0:
            raise ValidationError("prior sd must be > 0", field="sd")
        if self.risk_tier not in (1, 2, 3):
            raise ValidationError(f"unknown risk tier {self.risk_tier!r}", field="risk_tier")


@dataclass(frozen=True)
class EfficacyTransform:
    """Affine map from outcome-scale mean to a [0, 1] efficacy score, clamped."""

    slope: float = -0.1
    intercept: float = 0.4

    def __post_init__(self):
        if self.slope == 0:
            raise ValidationError("efficacy transform must be monotone (slope != 0)", field="slope")

    def __call__(self, mean: float) -> float:
        return min(1.0, max(0.0, self.intercept + self.slope * mean))


@dataclass(frozen=True)
class PriorModel:
    """Per-intervention effect priors plus the shared residual outcome sd."""

    interventions: dict[str, InterventionPrior]
    residual_sd: float
    efficacy: EfficacyTransform = EfficacyTransform()

    def __post_init__(self):
        if not self.interventions:
            raise ValidationError("prior model has no interventions", field="interventions")
        if not self.residual_sd > 0:
            raise ValidationError("residual_sd must be > 0", field="residual_sd")

    @classmethod
    def from_dict(cls, d: Mapping) -> "PriorModel":
        interventions = {
            name: InterventionPrior(
                mean=float(spec["mean"]),
                sd=float(spec["sd"]),
                risk_tier=int(spec.get("risk_tier", 1)),
                adjustments={k: float(v) for k, v in spec.get("adjustments", {}).items()},
                sd_inflation={k: float(v) for k, v in spec.get("sd_inflation", {}).items()},
            )
            for name, spec in d["interventions"].items()
        }
        eff = d.get("efficacy", {})
        return cls(
            interventions=interventions,
            residual_sd=float(d["residual_sd"]),
            efficacy=EfficacyTransform(
                slope=float(eff.get("slope", -0.1)),
                intercept=float(eff.get("intercept", 0.4)),
            ),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "PriorModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "interventions": {
                name: {
                    "mean": p.mean,
                    "sd": p.sd,
                    "risk_tier": p.risk_tier,
                    "adjustments": dict(p.adjustments),
                    "sd_inflation": dict(p.sd_inflation),
                }
                for name, p in self.interventions.items()
            },
            "residual_sd": self.residual_sd,
            "efficacy": {"slope": self.efficacy.slope, "intercept": self.efficacy.intercept},
        }


@dataclass
class InterventionCandidate:
    """Ranked candidate: prior effect distribution, efficacy, probability-optimal."""

    intervention_id: str
    prior_mean: float
    prior_sd: float
    efficacy: float
    risk_tier: int = 1
    sigma: float | None = None

    def __post_init__(self):
        if not self.prior_sd > 0:
            raise ValidationError("prior_sd must be > 0", field="prior_sd")
        if not 0.0 <= self.efficacy <= 1.0:
            raise ValidationError("efficacy must be in [0, 1]", field="efficacy")
        if self.sigma is not None and not 0.0 <= self.sigma <= 1.0:
            raise ValidationError("sigma must be in [0, 1]", field="sigma")

    def to_dict(self) -> dict:
        return {
            "intervention_id": self.intervention_id,
            "prior_mean": self.prior_mean,
            "prior_sd": self.prior_sd,
            "efficacy": self.efficacy,
            "risk_tier": self.risk_tier,
            "sigma": self.sigma,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "InterventionCandidate":
        return cls(
            intervention_id=d["intervention_id"],
            prior_mean=float(d["prior_mean"]),
            prior_sd=float(d["prior_sd"]),
            efficacy=float(d["efficacy"]),
            risk_tier=int(d.get("risk_tier", 1)),
            sigma=None if d.get("sigma") is None else float(d["sigma"]),
        )


def _covariate_value(profile: PatientProfile, name: str, intervention_id: str) -> float:
    if name not in profile.covariates:
        raise ValidationError(
            f"covariate {name!r} required by intervention {intervention_id!r} "
            f"is missing from profile {profile.patient_id!r}",
            field=f"covariates.{name}",
        )
    value = profile.covariates[name]
    if isinstance(value, bool):
        return 1.0 if value else 0.0
    if isinstance(value, (int, float)):
        return float(value)
    raise ValidationError(
        f"covariate {name!r} is not numeric (got {type(value).__name__})",
        field=f"covariates.{name}",
    )


def predict_candidates(model: PriorModel, profile: PatientProfile) -> list[InterventionCandidate]:
    """Rank every modeled intervention for this profile, best efficacy first.

    prior_mean = base mean + sum(coefficient * covariate). The probability-
    optimal field is left unset; fill it with `prob_optimal` or use
    `rank_candidates` for the combined call. Pure function of its inputs.
    """
    candidates = []
    for name, prior in model.interventions.items():
        mean = prior.mean
        for cov, coef in prior.adjustments.items():
            mean += coef * _covariate_value(profile, cov, name)
        sd = prior.sd
        for flag, factor in prior.sd_inflation.items():
            value = profile.covariates.get(flag)
            if value:
                sd *= factor
        candidates.append(
            InterventionCandidate(
                intervention_id=name,
                prior_mean=mean,
                prior_sd=sd,
                efficacy=model.efficacy(mean),
                risk_tier=prior.risk_tier,
            )
        )
    candidates.sort(key=lambda c: -c.efficacy)
    return candidates


def _prob_best(means: Sequence[float], sds: Sequence[float], samples: int, seed: int) -> list[float]:
    """Fraction of joint samples in which each candidate has the lowest draw.

    Ties go to the lowest index (probability zero for continuous draws; this
    only guards exact floating equality). The returned values sum to exactly
    1.0: the float division can round each entry, so the residual is folded
    into the largest one.
    """
    mu = np.asarray(means, dtype=float)
    sigma = np.asarray(sds, dtype=float)
    rng = np.random.default_rng(seed)
    draws = mu + rng.standard_normal((samples, mu.size)) * sigma
    wins = np.bincount(np.argmin(draws, axis=1), minlength=mu.size)
    probs = wins / samples
    probs[int(np.argmax(probs))] += 1.0 - probs.sum()
    return [float(p) for p in probs]


def prob_optimal(
    candidates: Sequence[tuple[float, float]], samples: int = 100_000, seed: int = 0
) -> list[float]:
    """Monte Carlo probability that each (mean, sd) candidate is the best.

    Best means the most negative effect. Deterministic for a fixed seed.
    """
    if len(candidates) < 2:
        raise ValidationError("prob_optimal requires >= 2 candidates", field="candidates")
    if samples < 1000:
        raise ValidationError("samples must be >= 1000", field="samples")
    means, sds = zip(*candidates)
    for i, sd in enumerate(sds):
        if not sd > 0:
            raise ValidationError(f"candidate {i} has non-positive sd", field=f"candidates[{i}].sd")
    return _prob_best(means, sds, samples, seed)


def two_candidate_prob_best(mu1: float, s1: float, mu2: float, s2: float) -> float:
    """Closed form for the two-candidate case: P(X1 < X2) for independent normals."""
    return 0.5 * (1.0 + math.erf((mu2 - mu1) / math.sqrt(2.0 * (s1 * s1 + s2 * s2))))


def rank_candidates(
    model: PriorModel, profile: PatientProfile, samples: int = 100_000, seed: int = 0
) -> list[InterventionCandidate]:
    """predict_candidates plus probability-optimal in one call.

    With a single modeled intervention its sigma is 1 by definition.
    """
    candidates = predict_candidates(model, profile)
    if len(candidates) == 1:
        candidates[0].sigma = 1.0
        return candidates
    sigmas = prob_optimal([(c.prior_mean, c.prior_sd) for c in candidates], samples, seed)
    for cand, sigma in zip(candidates, sigmas):
        cand.sigma = sigma
    return candidates
