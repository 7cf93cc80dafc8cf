"""N-of-1 crossover trial mechanics: schedule design, outcomes, stopping.

A schedule is a contiguous sequence of phases starting at day 1 (inclusive
day bounds): baseline periods first, then intervention periods arranged in
blocks where each block is an independent uniformly random permutation of
the arms, with optional washout gaps between intervention periods. Daily
outcome records accumulate in a TrialState; safety stopping rules are
evaluated on every ingest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import StateError, ValidationError

BASELINE = "baseline"
WASHOUT = "washout"
INTERVENTION = "intervention"
POST_TRIAL = "post_trial"

SOURCES = ("self_report", "wearable")


@dataclass(frozen=True)
class StoppingRule:
    """Fire when `metric` >= threshold on `consecutive_days` consecutive calendar days."""

    metric: str  # "pain" | "primary_event"
    threshold: float
    consecutive_days: int
    action: str  # "terminate" | "alert"

    def __post_init__(self):
        if self.metric not in ("pain", "primary_event"):
            raise ValidationError(f"unknown stopping metric {self.metric!r}", field="metric")
        if self.action not in ("terminate", "alert"):
            raise ValidationError(f"unknown stopping action {self.action!r}", field="action")
        if self.consecutive_days < 1:
            raise ValidationError("consecutive_days must be >= 1", field="consecutive_days")

    def describe(self) -> str:
        return f"{self.metric} >= {self.threshold:g} for {self.consecutive_days} consecutive days"

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "threshold": self.threshold,
            "consecutive_days": self.consecutive_days,
            "action": self.action,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "StoppingRule":
        return cls(
            metric=d["metric"],
            threshold=float(d["threshold"]),
            consecutive_days=int(d["consecutive_days"]),
            action=d["action"],
        )


@dataclass(frozen=True)
class TrialDesign:
    arms: tuple[str, ...]
    n_periods: int
    period_len_days: int = 14
    baseline_periods: int = 1
    washout_days: int = 0
    adaptive: bool = False
    seed: int = 0
    stopping_rules: tuple[StoppingRule, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        object.__setattr__(self, "stopping_rules", tuple(self.stopping_rules))
        if len(self.arms) < 2:
            raise ValidationError("crossover requires >=2 arms", field="arms")
        if len(set(self.arms)) != len(self.arms):
            raise ValidationError("arm ids must be unique", field="arms")
        if self.n_periods < len(self.arms):
            raise ValidationError("n_periods must be >= number of arms", field="n_periods")
        if not self.adaptive and self.n_periods % len(self.arms) != 0:
            raise ValidationError(
                f"n_periods={self.n_periods} not divisible by {len(self.arms)} arms "
                "(required for block randomization)",
                field="n_periods",
            )
        if self.period_len_days < 1:
            raise ValidationError("period_len_days must be >= 1", field="period_len_days")
        if self.baseline_periods < 0 or self.washout_days < 0:
            raise ValidationError("baseline_periods and washout_days must be >= 0")

    def to_dict(self) -> dict:
        return {
            "arms": list(self.arms),
            "n_periods": self.n_periods,
            "period_len_days": self.period_len_days,
            "baseline_periods": self.baseline_periods,
            "washout_days": self.washout_days,
            "adaptive": self.adaptive,
            "seed": self.seed,
            "stopping_rules": [r.to_dict() for r in self.stopping_rules],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrialDesign":
        return cls(
            arms=tuple(d["arms"]),
            n_periods=int(d["n_periods"]),
            period_len_days=int(d.get("period_len_days", 14)),
            baseline_periods=int(d.get("baseline_periods", 1)),
            washout_days=int(d.get("washout_days", 0)),
            adaptive=bool(d.get("adaptive", False)),
            seed=int(d.get("seed", 0)),
            stopping_rules=tuple(StoppingRule.from_dict(r) for r in d.get("stopping_rules", [])),
        )


@dataclass(frozen=True)
class Phase:
    kind: str  # baseline | washout | intervention
    arm: str | None
    start_day: int
    end_day: int  # inclusive

    def __contains__(self, day: int) -> bool:
        return self.start_day <= day <= self.end_day

    def to_dict(self) -> dict:
        return {"kind": self.kind, "arm": self.arm, "start_day": self.start_day, "end_day": self.end_day}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Phase":
        return cls(kind=d["kind"], arm=d.get("arm"), start_day=int(d["start_day"]), end_day=int(d["end_day"]))


@dataclass(frozen=True)
class Schedule:
    phases: tuple[Phase, ...]

    @property
    def last_day(self) -> int:
        return self.phases[-1].end_day if self.phases else 0

    def intervention_phases(self) -> list[Phase]:
        return [p for p in self.phases if p.kind == INTERVENTION]

    def arm_sequence(self) -> list[str]:
        return [p.arm for p in self.intervention_phases()]

    def to_dict(self) -> dict:
        return {"phases": [p.to_dict() for p in self.phases]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Schedule":
        return cls(phases=tuple(Phase.from_dict(p) for p in d["phases"]))


@dataclass(frozen=True)
class Assignment:
    kind: str  # baseline | washout | intervention | post_trial
    arm: str | None = None
    phase_index: int | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "arm": self.arm, "phase_index": self.phase_index}


@dataclass(frozen=True)
class OutcomeRecord:
    """One day's diary entry. At most one record per (day, source) is retained."""

    trial_id: str
    day: int
    primary_event: bool
    pain: int | None = None
    disability: int | None = None
    medication_use: bool | None = None
    source: str = "self_report"

    def __post_init__(self):
        if self.day < 1:
            raise ValidationError("day must be >= 1", field="day")
        if self.pain is not None and not 0 <= self.pain <= 10:
            raise ValidationError(f"pain must be in [0, 10], got {self.pain}", field="pain")
        if self.source not in SOURCES:
            raise ValidationError(f"unknown source {self.source!r}", field="source")

    def to_dict(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "day": self.day,
            "primary_event": self.primary_event,
            "pain": self.pain,
            "disability": self.disability,
            "medication_use": self.medication_use,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "OutcomeRecord":
        return cls(
            trial_id=d["trial_id"],
            day=int(d["day"]),
            primary_event=bool(d["primary_event"]),
            pain=None if d.get("pain") is None else int(d["pain"]),
            disability=None if d.get("disability") is None else int(d["disability"]),
            medication_use=None if d.get("medication_use") is None else bool(d["medication_use"]),
            source=d.get("source", "self_report"),
        )


@dataclass(frozen=True)
class StoppingVerdict:
    kind: str  # "continue" | "stop" | "alert"
    rule: StoppingRule | None = None
    day: int | None = None
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "rule": self.rule.to_dict() if self.rule else None,
            "day": self.day,
            "reason": self.reason,
        }


CONTINUE = StoppingVerdict(kind="continue")


@dataclass(frozen=True)
class PeriodSummary:
    """Per-period aggregate used by inference; observed-day counts expose missingness."""

    arm: str  # "baseline" for baseline phases
    start_day: int
    end_day: int
    period_len_days: int
    event_days: int
    n_observed_days: int
    mean_pain: float | None
    previous_arm: str | None

    @property
    def fully_observed(self) -> bool:
        return self.n_observed_days == self.period_len_days

    def to_dict(self) -> dict:
        return {
            "arm": self.arm,
            "start_day": self.start_day,
            "end_day": self.end_day,
            "period_len_days": self.period_len_days,
            "event_days": self.event_days,
            "n_observed_days": self.n_observed_days,
            "mean_pain": self.mean_pain,
            "previous_arm": self.previous_arm,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PeriodSummary":
        return cls(
            arm=d["arm"],
            start_day=int(d["start_day"]),
            end_day=int(d["end_day"]),
            period_len_days=int(d["period_len_days"]),
            event_days=int(d["event_days"]),
            n_observed_days=int(d["n_observed_days"]),
            mean_pain=None if d.get("mean_pain") is None else float(d["mean_pain"]),
            previous_arm=d.get("previous_arm"),
        )


def design_trial(design: TrialDesign) -> Schedule:
    """Lay out baseline, intervention, and washout phases. Deterministic per seed.

    Non-adaptive: n_periods/len(arms) blocks, each an independent uniform
    permutation of the arms. Adaptive: only the first block is laid out (every
    arm appears once before adaptation); later periods are appended one at a
    time with `extend_adaptive`.
    """
    rng = np.random.default_rng(design.seed)
    n_arms = len(design.arms)
    n_blocks = 1 if design.adaptive else design.n_periods // n_arms

    sequence: list[str] = []
    for _ in range(n_blocks):
        block = [design.arms[i] for i in rng.permutation(n_arms)]
        sequence.extend(block)

    phases: list[Phase] = []
    day = 1
    for _ in range(design.baseline_periods):
        phases.append(Phase(BASELINE, None, day, day + design.period_len_days - 1))
        day += design.period_len_days
    for i, arm in enumerate(sequence):
        if i > 0 and design.washout_days > 0:
            phases.append(Phase(WASHOUT, None, day, day + design.washout_days - 1))
            day += design.washout_days
        phases.append(Phase(INTERVENTION, arm, day, day + design.period_len_days - 1))
        day += design.period_len_days
    return Schedule(phases=tuple(phases))


def extend_adaptive(schedule: Schedule, design: TrialDesign, arm: str) -> Schedule:
    """Append one intervention period (plus washout) to an adaptive schedule."""
    if not design.adaptive:
        raise StateError("schedule extension is only valid for adaptive designs")
    if arm not in design.arms:
        raise ValidationError(f"unknown arm {arm!r}", field="arm")
    if len(schedule.intervention_phases()) >= design.n_periods:
        raise StateError("schedule already has the designed number of periods")
    phases = list(schedule.phases)
    day = schedule.last_day + 1
    if design.washout_days > 0:
        phases.append(Phase(WASHOUT, None, day, day + design.washout_days - 1))
        day += design.washout_days
    phases.append(Phase(INTERVENTION, arm, day, day + design.period_len_days - 1))
    return Schedule(phases=tuple(phases))


def current_assignment(schedule: Schedule, day: int) -> Assignment:
    """Phase containing `day` (inclusive bounds), or post_trial past the end."""
    if day < 1:
        raise ValidationError("day must be >= 1", field="day")
    for i, phase in enumerate(schedule.phases):
        if day in phase:
            return Assignment(kind=phase.kind, arm=phase.arm, phase_index=i)
    return Assignment(kind=POST_TRIAL)


class TrialState:
    """Accumulated state of one running trial.

    Mutations are expected to be serialized by the caller (one logical writer
    per trial); reads see a consistent snapshot. The audit log is append-only;
    status moves one way: active -> stopped | completed.
    """

    def __init__(self, trial_id: str, design: TrialDesign, schedule: Schedule | None = None):
        self.trial_id = trial_id
        self.design = design
        self.schedule = schedule if schedule is not None else design_trial(design)
        self._records: dict[tuple[int, str], OutcomeRecord] = {}
        self.audit_log: list[dict] = []
        self.alerts: list[dict] = []
        self.status = "active"
        self.stop_reason: str | None = None
        self.stop_day: int | None = None
        self._summaries: tuple[PeriodSummary, ...] | None = None

    @property
    def records(self) -> list[OutcomeRecord]:
        """Stored records sorted by (day, source)."""
        return [self._records[k] for k in sorted(self._records)]

    @property
    def active(self) -> bool:
        return self.status == "active"

    def latest_day(self) -> int | None:
        return max((d for d, _ in self._records), default=None)

    def record_for_day(self, day: int) -> OutcomeRecord | None:
        """Day-level view: the self-report wins over a wearable record for the same day."""
        for source in SOURCES:
            rec = self._records.get((day, source))
            if rec is not None:
                return rec
        return None

    def mark_completed(self) -> None:
        if self.status == "stopped":
            raise StateError(f"trial {self.trial_id} was stopped and cannot complete")
        self.status = "completed"

    def to_dict(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "design": self.design.to_dict(),
            "schedule": self.schedule.to_dict(),
            "records": [r.to_dict() for r in self.records],
            "audit_log": list(self.audit_log),
            "alerts": list(self.alerts),
            "status": self.status,
            "stop_reason": self.stop_reason,
            "stop_day": self.stop_day,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrialState":
        state = cls(
            trial_id=d["trial_id"],
            design=TrialDesign.from_dict(d["design"]),
            schedule=Schedule.from_dict(d["schedule"]),
        )
        for rec in d.get("records", []):
            record = OutcomeRecord.from_dict(rec)
            state._records[(record.day, record.source)] = record
        state.audit_log = list(d.get("audit_log", []))
        state.alerts = list(d.get("alerts", []))
        state.status = d.get("status", "active")
        state.stop_reason = d.get("stop_reason")
        state.stop_day = d.get("stop_day")
        return state


def _metric_value(record: OutcomeRecord, metric: str) -> float | None:
    if metric == "pain":
        return None if record.pain is None else float(record.pain)
    return 1.0 if record.primary_event else 0.0


def check_stopping(state: TrialState) -> StoppingVerdict:
    """Evaluate stopping rules against the window ending at the latest record.

    A rule fires iff the metric is >= threshold on every one of the rule's
    consecutive calendar days ending at the latest recorded day (a day with
    no qualifying record breaks the streak). Terminate sets the trial status;
    alert records a provider notification and leaves the trial active.
    Idempotent: re-running without new records never changes the verdict.
    """
    if state.status == "stopped":
        return StoppingVerdict(kind="stop", day=state.stop_day, reason=state.stop_reason)
    latest = state.latest_day()
    if latest is None:
        return CONTINUE

    def fires(rule: StoppingRule) -> bool:
        for day in range(latest - rule.consecutive_days + 1, latest + 1):
            if day < 1:
                return False
            rec = state.record_for_day(day)
            value = None if rec is None else _metric_value(rec, rule.metric)
            if value is None or value < rule.threshold:
                return False
        return True

    alert_verdict: StoppingVerdict | None = None
    for idx, rule in enumerate(state.design.stopping_rules):
        if not fires(rule):
            continue
        if rule.action == "terminate":
            state.status = "stopped"
            state.stop_reason = rule.describe()
            state.stop_day = latest
            return StoppingVerdict(kind="stop", rule=rule, day=latest, reason=state.stop_reason)
        notification = {"rule_index": idx, "day": latest, "reason": rule.describe()}
        if notification not in state.alerts:
            state.alerts.append(notification)
        if alert_verdict is None:
            alert_verdict = StoppingVerdict(kind="alert", rule=rule, day=latest, reason=rule.describe())
    return alert_verdict or CONTINUE


def ingest_outcome(state: TrialState, record: OutcomeRecord) -> StoppingVerdict:
    """Append (or correct) one daily record and evaluate stopping immediately.

    A resubmission for the same (day, source) replaces the stored record and
    is audit-logged. Ingesting the schedule's final day completes the trial
    unless a stopping rule terminated it first. Mutates `state`; the verdict
    is returned.
    """
    if not state.active:
        raise StateError(f"trial {state.trial_id} is {state.status}, not accepting records")
    if record.trial_id != state.trial_id:
        raise ValidationError(
            f"record is for trial {record.trial_id!r}, not {state.trial_id!r}", field="trial_id"
        )
    if record.day > state.schedule.last_day:
        raise ValidationError(
            f"day {record.day} is outside the trial range 1..{state.schedule.last_day}", field="day"
        )
    key = (record.day, record.source)
    action = "replace" if key in state._records else "insert"
    state._records[key] = record
    state.audit_log.append({"action": action, "day": record.day, "source": record.source})
    state._summaries = None

    verdict = check_stopping(state)
    if state.active and record.day == state.schedule.last_day:
        state.mark_completed()
    return verdict


def period_summary(state: TrialState) -> list[PeriodSummary]:
    """Summarize each baseline and intervention period from the day-level records.

    Missing days stay missing (no imputation): event_days counts only observed
    event-positive days and n_observed_days records coverage so inference can
    downweight. previous_arm is the arm of the preceding intervention period
    (None for the first; baseline rows always have None).
    """
    if state._summaries is not None:
        return list(state._summaries)
    out: list[PeriodSummary] = []
    prev_arm: str | None = None
    for phase in state.schedule.phases:
        if phase.kind == WASHOUT:
            continue
        observed = 0
        events = 0
        pains: list[int] = []
        for day in range(phase.start_day, phase.end_day + 1):
            rec = state.record_for_day(day)
            if rec is None:
                continue
            observed += 1
            if rec.primary_event:
                events += 1
            if rec.pain is not None:
                pains.append(rec.pain)
        arm = phase.arm if phase.kind == INTERVENTION else BASELINE
        out.append(
            PeriodSummary(
                arm=arm,
                start_day=phase.start_day,
                end_day=phase.end_day,
                period_len_days=phase.end_day - phase.start_day + 1,
                event_days=events,
                n_observed_days=observed,
                mean_pain=float(np.mean(pains)) if pains else None,
                previous_arm=prev_arm if phase.kind == INTERVENTION else None,
            )
        )
        if phase.kind == INTERVENTION:
            prev_arm = phase.arm
    state._summaries = tuple(out)
    return out


def summaries_to_rows(summaries: Iterable[PeriodSummary]) -> list[dict]:
    """Flat dict rows for tabular export (one header-compatible dict per period)."""
    return [s.to_dict() for s in summaries]
