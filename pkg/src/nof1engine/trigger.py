"""Decision policy: direct recommendation, N-of-1 validation set, or no action.

Candidates first pass a risk-tier gate and a contraindication check; the
probability-optimal values of the survivors are renormalized, then compared
against two thresholds: tau_direct (confident enough to recommend without a
trial) and tau_include (uncertain enough that a trial is worth running).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .errors import ValidationError
from .priors import InterventionCandidate, PatientProfile

OVERSIGHT_FLAG = "clinical oversight required"
CLINICIAN_REVIEW_FLAG = "clinician review"
LOW_RELIABILITY_FLAG = "low-reliability recommendation"

_SIGMA_SUM_TOL = 1e-6


@dataclass(frozen=True)
class TriggerPolicy:
    """Thresholds for trial inclusion (tau_include) and direct recommendation (tau_direct)."""

    tau_include: float = 0.25
    tau_direct: float = 0.95
    max_active_arms: int = 2
    include_placebo: bool = True
    placebo_id: str = "placebo"

    def __post_init__(self):
        if not 0.0 < self.tau_include < self.tau_direct <= 1.0:
            raise ValidationError(
                "thresholds must satisfy 0 < tau_include < tau_direct <= 1", field="tau_include"
            )
        if self.max_active_arms < 1:
            raise ValidationError("max_active_arms must be >= 1", field="max_active_arms")
        if self.max_active_arms + int(self.include_placebo) < 2:
            raise ValidationError(
                "a crossover trial needs >= 2 arms: raise max_active_arms or include placebo",
                field="max_active_arms",
            )

    @classmethod
    def from_dict(cls, d: dict) -> "TriggerPolicy":
        return cls(
            tau_include=float(d.get("tau_include", 0.25)),
            tau_direct=float(d.get("tau_direct", 0.95)),
            max_active_arms=int(d.get("max_active_arms", 2)),
            include_placebo=bool(d.get("include_placebo", True)),
            placebo_id=d.get("placebo_id", "placebo"),
        )

    def to_dict(self) -> dict:
        return {
            "tau_include": self.tau_include,
            "tau_direct": self.tau_direct,
            "max_active_arms": self.max_active_arms,
            "include_placebo": self.include_placebo,
            "placebo_id": self.placebo_id,
        }


class DecisionKind(str, Enum):
    DIRECT_RECOMMEND = "direct_recommend"
    VALIDATE = "validate"
    NO_ACTION = "no_action"


@dataclass(frozen=True)
class RiskGate:
    allowed: bool
    flag: str | None = None
    reason: str | None = None


@dataclass(frozen=True)
class TriggerDecision:
    kind: DecisionKind
    intervention_id: str | None = None
    validate_arms: tuple[str, ...] = ()
    include_placebo: bool = False
    survivor_sigmas: dict[str, float] = field(default_factory=dict)
    flags: tuple[str, ...] = ()

    @property
    def trial_arms(self) -> tuple[str, ...]:
        """Arms a triggered trial would run, placebo appended when enabled."""
        if self.kind is not DecisionKind.VALIDATE:
            return ()
        return self.validate_arms + (("placebo",) if self.include_placebo else ())

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "intervention_id": self.intervention_id,
            "validate_arms": list(self.validate_arms),
            "include_placebo": self.include_placebo,
            "survivor_sigmas": dict(self.survivor_sigmas),
            "flags": list(self.flags),
        }


def gate_risk(intervention_id: str, risk_tier: int, policy: TriggerPolicy) -> RiskGate:
    """Tier 1: eligible. Tier 2: eligible under clinical oversight. Tier 3: never."""
    if risk_tier == 1:
        return RiskGate(allowed=True)
    if risk_tier == 2:
        return RiskGate(allowed=True, flag=f"{OVERSIGHT_FLAG}: {intervention_id}")
    if risk_tier == 3:
        return RiskGate(
            allowed=False,
            reason=f"{intervention_id}: tier 3 risk, not eligible for self-experimentation",
        )
    raise ValidationError(f"unknown risk tier {risk_tier!r} for {intervention_id!r}", field="risk_tier")


def check_contraindications(intervention_id: str, profile: PatientProfile) -> list[str]:
    """Return violations (empty list = ok). Ids are compared exactly, no normalization."""
    if intervention_id in profile.contraindicated:
        return [f"{intervention_id}: contraindicated for patient {profile.patient_id}"]
    return []


def _renormalize(sigmas: list[float]) -> list[float]:
    total = sum(sigmas)
    out = [s / total for s in sigmas]
    out[out.index(max(out))] += 1.0 - sum(out)
    return out


def decide(
    candidates: Sequence[InterventionCandidate],
    policy: TriggerPolicy,
    profile: PatientProfile,
) -> TriggerDecision:
    """Gate, renormalize, and threshold ranked candidates into a decision.

    Deterministic: no randomness, so the same candidates, policy, and profile
    always produce the same decision.
    """
    if not candidates:
        raise ValidationError("decide requires at least one candidate", field="candidates")
    sigmas = [c.sigma for c in candidates]
    if any(s is None for s in sigmas):
        raise ValidationError("all candidates need a probability-optimal value", field="candidates")
    if abs(sum(sigmas) - 1.0) > _SIGMA_SUM_TOL:
        raise ValidationError(
            f"candidate sigmas must sum to 1 (got {sum(sigmas):.6f})", field="candidates"
        )

    flags: list[str] = []
    survivors: list[InterventionCandidate] = []
    for cand in candidates:
        gate = gate_risk(cand.intervention_id, cand.risk_tier, policy)
        if not gate.allowed:
            flags.append(f"excluded by risk gate: {gate.reason}")
            continue
        violations = check_contraindications(cand.intervention_id, profile)
        if violations:
            flags.extend(f"excluded: {v}" for v in violations)
            continue
        if gate.flag:
            flags.append(gate.flag)
        survivors.append(cand)

    if not survivors:
        flags.append(CLINICIAN_REVIEW_FLAG)
        return TriggerDecision(kind=DecisionKind.NO_ACTION, flags=tuple(flags))

    renormed = _renormalize([c.sigma for c in survivors])
    order = sorted(range(len(survivors)), key=lambda i: (-renormed[i], i))
    survivor_sigmas = {survivors[i].intervention_id: renormed[i] for i in order}
    top_idx = order[0]
    top = survivors[top_idx]

    if renormed[top_idx] < 2.0 * policy.tau_include:
        flags.append(f"{LOW_RELIABILITY_FLAG}: top candidate sigma {renormed[top_idx]:.3f}")

    if renormed[top_idx] >= policy.tau_direct:
        return TriggerDecision(
            kind=DecisionKind.DIRECT_RECOMMEND,
            intervention_id=top.intervention_id,
            survivor_sigmas=survivor_sigmas,
            flags=tuple(flags),
        )

    # subset chosen by sigma descending; presented in the original ranking order
    kept = {i for i in order[: policy.max_active_arms] if renormed[i] >= policy.tau_include}
    validate = [survivors[i].intervention_id for i in range(len(survivors)) if i in kept]
    if not validate:
        flags.append(CLINICIAN_REVIEW_FLAG)
        return TriggerDecision(
            kind=DecisionKind.NO_ACTION, survivor_sigmas=survivor_sigmas, flags=tuple(flags)
        )

    return TriggerDecision(
        kind=DecisionKind.VALIDATE,
        validate_arms=tuple(validate),
        include_placebo=policy.include_placebo,
        survivor_sigmas=survivor_sigmas,
        flags=tuple(flags),
    )
