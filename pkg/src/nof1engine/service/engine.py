"""Event-sourced engine binding the modules into one deployable process.

Commands validate against current state, append one event, then apply it;
state is whatever replaying the log produces, so a crash-and-restart
reconstructs the identical state. Two run modes share the binary: device
mode owns patients and trials (raw outcome records never leave it),
aggregate mode accepts only privacy-protected contribution payloads.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .. import data as _data
from ..errors import NotFoundError, StateError, ValidationError
from ..inference import PosteriorState, generate_report, update_posterior
from ..priors import PatientProfile, PriorModel, rank_candidates
from ..privacy import (
    Contribution,
    LocalStore,
    PrivacyBudget,
    aggregate_contributions,
    clip_and_noise,
    generate_key,
)
from ..trial import (
    OutcomeRecord,
    Schedule,
    TrialDesign,
    TrialState,
    current_assignment,
    design_trial,
    ingest_outcome,
    period_summary,
)
from ..trigger import TriggerPolicy, decide
from .config import ServiceConfig
from .eventlog import EventLog

SCHEMA_VERSION = "v1"

# keys a Contribution payload may carry; anything else is rejected at the
# aggregate boundary so raw records cannot be smuggled through
CONTRIBUTION_KEYS = {"intervention_id", "estimate", "noise_sd", "clip", "count", "consent", "schema_version"}


@dataclass
class TrialRecord:
    trial_id: str
    patient_id: str
    state: TrialState
    priors: dict[str, tuple[float, float]]
    sigma_y: float

    def to_dict(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "patient_id": self.patient_id,
            "state": self.state.to_dict(),
            "priors": {a: list(g) for a, g in self.priors.items()},
            "sigma_y": self.sigma_y,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrialRecord":
        return cls(
            trial_id=d["trial_id"],
            patient_id=d["patient_id"],
            state=TrialState.from_dict(d["state"]),
            priors={a: (float(g[0]), float(g[1])) for a, g in d["priors"].items()},
            sigma_y=float(d["sigma_y"]),
        )


@dataclass
class EngineState:
    patients: dict[str, PatientProfile] = field(default_factory=dict)
    trials: dict[str, TrialRecord] = field(default_factory=dict)
    budgets: dict[str, PrivacyBudget] = field(default_factory=dict)
    contributions: list[Contribution] = field(default_factory=list)
    ingest_results: dict[str, dict[str, dict]] = field(default_factory=dict)  # trial -> idem key -> result
    trial_counter: int = 0

    def to_dict(self) -> dict:
        return {
            "patients": {k: p.to_dict() for k, p in self.patients.items()},
            "trials": {k: t.to_dict() for k, t in self.trials.items()},
            "budgets": {k: b.to_dict() for k, b in self.budgets.items()},
            "contributions": [c.to_dict() for c in self.contributions],
            "ingest_results": self.ingest_results,
            "trial_counter": self.trial_counter,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "EngineState":
        return cls(
            patients={k: PatientProfile.from_dict(p) for k, p in d["patients"].items()},
            trials={k: TrialRecord.from_dict(t) for k, t in d["trials"].items()},
            budgets={k: PrivacyBudget.from_dict(b) for k, b in d["budgets"].items()},
            contributions=[Contribution.from_dict(c) for c in d["contributions"]],
            ingest_results={k: dict(v) for k, v in d["ingest_results"].items()},
            trial_counter=int(d["trial_counter"]),
        )


class Engine:
    """One process, one event log, one state. Writes serialize on a lock."""

    def __init__(self, config: ServiceConfig, model: PriorModel | None = None):
        self.config = config
        self.mode = config.mode
        if model is not None:
            self.model = model
        elif config.model_path:
            self.model = PriorModel.from_file(config.model_path)
        else:
            self.model = _data.demo_prior_model()
        config.data_dir.mkdir(parents=True, exist_ok=True)
        self.log = EventLog(config.data_dir / "events.jsonl")
        self._snapshot_path = config.data_dir / "snapshot.json"
        self._lock = threading.RLock()
        self.state = EngineState()
        self._applied_seq = 0
        self._local_store: LocalStore | None = None
        if self.mode == "device":
            key_path = config.data_dir / "local.key"
            if not key_path.exists():
                key_path.write_bytes(generate_key())
                key_path.chmod(0o600)
            self._local_store = LocalStore(config.data_dir / "records.enc", key_path.read_bytes())
        self._replay()

    # -- persistence ------------------------------------------------------

    def _replay(self) -> None:
        import json

        if self._snapshot_path.exists():
            snap = json.loads(self._snapshot_path.read_text(encoding="utf-8"))
            self.state = EngineState.from_dict(snap["state"])
            self._applied_seq = int(snap["seq"])
        for entry in self.log.read_all():
            if entry.seq <= self._applied_seq:
                continue
            self._apply(entry.payload, entry.ts, replaying=True)
            self._applied_seq = entry.seq

    def snapshot(self) -> Path:
        import json

        with self._lock:
            payload = {"seq": self._applied_seq, "state": self.state.to_dict()}
            self._snapshot_path.write_text(
                json.dumps(payload, sort_keys=True), encoding="utf-8"
            )
        return self._snapshot_path

    def _commit(self, entity: str, payload: dict):
        entry = self.log.append(entity, payload)
        result = self._apply(payload, entry.ts)
        self._applied_seq = entry.seq
        if self.config.snapshot_every and entry.seq % self.config.snapshot_every == 0:
            self.snapshot()
        return result

    def _apply(self, event: dict, ts: float, replaying: bool = False):
        """Deterministic state transition; shared by live commands and replay.

        `replaying` suppresses side channels outside the state (the encrypted
        record mirror), which already hold the earlier writes.
        """
        kind = event["type"]
        if kind == "patient_registered":
            profile = PatientProfile.from_dict(event["profile"])
            self.state.patients[profile.patient_id] = profile
            self.state.budgets[profile.patient_id] = PrivacyBudget(
                epsilon=event["budget"]["epsilon"],
                delta=event["budget"]["delta"],
                clip=event["budget"]["clip"],
            )
            return profile
        if kind == "trial_created":
            record = TrialRecord(
                trial_id=event["trial_id"],
                patient_id=event["patient_id"],
                state=TrialState(
                    trial_id=event["trial_id"],
                    design=TrialDesign.from_dict(event["design"]),
                    schedule=Schedule.from_dict(event["schedule"]),
                ),
                priors={a: (float(g[0]), float(g[1])) for a, g in event["priors"].items()},
                sigma_y=float(event["sigma_y"]),
            )
            self.state.trials[record.trial_id] = record
            self.state.trial_counter += 1
            return record
        if kind == "outcome_ingested":
            record = self.state.trials[event["trial_id"]]
            outcome = OutcomeRecord.from_dict(event["record"])
            verdict = ingest_outcome(record.state, outcome)
            result = {
                "trial_id": record.trial_id,
                "day": outcome.day,
                "status": record.state.status,
                "verdict": verdict.to_dict(),
                "alerts": list(record.state.alerts),
                "schema_version": SCHEMA_VERSION,
            }
            key = event.get("idempotency_key")
            if key:
                self.state.ingest_results.setdefault(record.trial_id, {})[key] = result
            if self._local_store is not None and not replaying:
                self._local_store.append(event["record"])
            return result
        if kind == "contribution_made":
            budget = self.state.budgets[event["patient_id"]]
            budget.spend(event["epsilon"], event["delta"], ts)
            return Contribution.from_dict(event["contribution"])
        if kind == "contribution_received":
            contribution = Contribution.from_dict(event["contribution"])
            self.state.contributions.append(contribution)
            return contribution
        raise StateError(f"unknown event type {kind!r}")

    # -- helpers ----------------------------------------------------------

    def _require_mode(self, mode: str) -> None:
        if self.mode != mode:
            raise StateError(f"endpoint requires {mode} mode, this service runs {self.mode} mode")

    def _patient(self, patient_id: str) -> PatientProfile:
        if patient_id not in self.state.patients:
            raise NotFoundError(f"unknown patient {patient_id!r}", field="patient_id")
        return self.state.patients[patient_id]

    def _trial(self, trial_id: str) -> TrialRecord:
        if trial_id not in self.state.trials:
            raise NotFoundError(f"unknown trial {trial_id!r}", field="trial_id")
        return self.state.trials[trial_id]

    def _resolve_profile(self, payload: Mapping) -> PatientProfile:
        if "patient_id" in payload and "profile" not in payload:
            return self._patient(payload["patient_id"])
        if "profile" in payload:
            return PatientProfile.from_dict(payload["profile"])
        raise ValidationError("provide patient_id or an inline profile", field="patient_id")

    # -- device-mode commands ----------------------------------------------

    def register_patient(self, profile: Mapping) -> dict:
        self._require_mode("device")
        with self._lock:
            parsed = PatientProfile.from_dict(profile)
            event = {
                "type": "patient_registered",
                "profile": parsed.to_dict(),
                "budget": {
                    "epsilon": self.config.budget_epsilon,
                    "delta": self.config.budget_delta,
                    "clip": self.config.clip,
                },
                "schema_version": SCHEMA_VERSION,
            }
            result = self._commit("patient", event)
            return result.to_dict()

    def rank(self, payload: Mapping) -> dict:
        self._require_mode("device")
        profile = self._resolve_profile(payload)
        samples = int(payload.get("samples", 100_000))
        seed = int(payload.get("seed", self.config.seed))
        candidates = rank_candidates(self.model, profile, samples, seed)
        return {
            "patient_id": profile.patient_id,
            "candidates": [c.to_dict() for c in candidates],
            "samples": samples,
            "seed": seed,
            "schema_version": SCHEMA_VERSION,
        }

    def trigger_decide(self, payload: Mapping) -> dict:
        self._require_mode("device")
        profile = self._resolve_profile(payload)
        if "candidates" in payload:
            from ..priors import InterventionCandidate

            candidates = [InterventionCandidate.from_dict(c) for c in payload["candidates"]]
        else:
            candidates = rank_candidates(
                self.model,
                profile,
                int(payload.get("samples", 100_000)),
                int(payload.get("seed", self.config.seed)),
            )
        policy = (
            TriggerPolicy.from_dict(payload["policy"]) if "policy" in payload else self.config.trigger
        )
        decision = decide(candidates, policy, profile)
        return {"decision": decision.to_dict(), "schema_version": SCHEMA_VERSION}

    def create_trial(self, payload: Mapping) -> dict:
        self._require_mode("device")
        with self._lock:
            patient = self._patient(payload.get("patient_id", ""))
            design_dict = dict(payload.get("design", {}))
            design_dict.setdefault("seed", self.config.seed + self.state.trial_counter)
            design = TrialDesign.from_dict(design_dict)
            priors = {}
            for arm in design.arms:
                if arm == "placebo":
                    continue
                if arm not in self.model.interventions:
                    raise ValidationError(f"arm {arm!r} is not a modeled intervention", field="design.arms")
                if arm in patient.contraindicated:
                    raise ValidationError(f"arm {arm!r} is contraindicated for this patient", field="design.arms")
                prior = self.model.interventions[arm]
                priors[arm] = (prior.mean, prior.sd)
            trial_id = payload.get("trial_id") or f"trial-{self.state.trial_counter + 1:05d}"
            if trial_id in self.state.trials:
                raise StateError(f"trial {trial_id!r} already exists")
            schedule = design_trial(design)
            event = {
                "type": "trial_created",
                "trial_id": trial_id,
                "patient_id": patient.patient_id,
                "design": design.to_dict(),
                "schedule": schedule.to_dict(),
                "priors": {a: list(g) for a, g in priors.items()},
                "sigma_y": self.model.residual_sd,
                "schema_version": SCHEMA_VERSION,
            }
            record = self._commit("trial", event)
            return self.trial_summary(record.trial_id)

    def trial_summary(self, trial_id: str) -> dict:
        record = self._trial(trial_id)
        return {
            "trial_id": record.trial_id,
            "patient_id": record.patient_id,
            "status": record.state.status,
            "design": record.state.design.to_dict(),
            "schedule": record.state.schedule.to_dict(),
            "record_count": len(record.state.records),
            "alerts": list(record.state.alerts),
            "schema_version": SCHEMA_VERSION,
        }

    def assignment(self, trial_id: str, day: int) -> dict:
        self._require_mode("device")
        record = self._trial(trial_id)
        assignment = current_assignment(record.state.schedule, day)
        return {
            "trial_id": trial_id,
            "day": day,
            "assignment": assignment.to_dict(),
            "status": record.state.status,
            "schema_version": SCHEMA_VERSION,
        }

    def ingest(self, trial_id: str, payload: Mapping) -> dict:
        self._require_mode("device")
        with self._lock:
            record = self._trial(trial_id)
            key = payload.get("idempotency_key")
            if key:
                cached = self.state.ingest_results.get(trial_id, {}).get(key)
                if cached is not None:
                    return dict(cached, idempotent_replay=True)
            record_dict = dict(payload.get("record", {}))
            record_dict.setdefault("trial_id", trial_id)
            outcome = OutcomeRecord.from_dict(record_dict)  # validates ranges
            if outcome.trial_id != trial_id:
                raise ValidationError("record trial_id does not match the URL", field="record.trial_id")
            if not record.state.active:
                raise StateError(f"trial {trial_id} is {record.state.status}, not accepting records")
            if outcome.day > record.state.schedule.last_day:
                raise ValidationError(
                    f"day {outcome.day} is outside the trial range 1..{record.state.schedule.last_day}",
                    field="record.day",
                )
            event = {
                "type": "outcome_ingested",
                "trial_id": trial_id,
                "record": outcome.to_dict(),
                "idempotency_key": key,
                "schema_version": SCHEMA_VERSION,
            }
            return self._commit("trial", event)

    def posterior(self, trial_id: str, *, carryover: bool = False) -> dict:
        self._require_mode("device")
        record = self._trial(trial_id)
        post = self._posterior_state(record, carryover=carryover)
        sigmas = None
        if len(post.arm_order) >= 2:
            from ..inference import posterior_prob_optimal

            sigmas = posterior_prob_optimal(post, samples=100_000, seed=record.state.design.seed + 0x5EED)
        return {
            "trial_id": trial_id,
            "status": record.state.status,
            "posterior": post.to_dict(),
            "prob_optimal": sigmas,
            "periods": [s.to_dict() for s in period_summary(record.state)],
            "schema_version": SCHEMA_VERSION,
        }

    def _posterior_state(self, record: TrialRecord, *, carryover: bool = False) -> PosteriorState:
        summaries = period_summary(record.state)
        return update_posterior(
            record.priors,
            record.sigma_y,
            summaries,
            period_len_days=record.state.design.period_len_days,
            carryover=carryover,
        )

    def report(self, trial_id: str, *, deltas_per_month=(2.0,), samples: int = 100_000) -> dict:
        self._require_mode("device")
        record = self._trial(trial_id)
        post = self._posterior_state(record)
        report = generate_report(post, record.state, deltas_per_month=deltas_per_month, samples=samples)
        return report.to_dict()

    def contribute(self, payload: Mapping) -> dict:
        self._require_mode("device")
        with self._lock:
            patient = self._patient(payload.get("patient_id", ""))
            record = self._trial(payload.get("trial_id", ""))
            if record.patient_id != patient.patient_id:
                raise ValidationError("trial does not belong to this patient", field="trial_id")
            if record.state.active:
                raise StateError("trial still active; contribute after completion or stop")
            post = self._posterior_state(record)
            intervention = payload.get("intervention_id")
            if intervention is None:
                intervention = min(post.effects, key=lambda a: post.effects[a].mean)
            if intervention not in post.effects:
                raise NotFoundError(f"unknown arm {intervention!r}", field="intervention_id")
            epsilon = float(payload.get("epsilon", 0.5))
            delta = float(payload.get("delta", 1e-5))
            budget = self.state.budgets[patient.patient_id]
            seed = payload.get("seed")
            if seed is None:
                seed = (self.config.seed * 1_000_003 + len(budget.spent)) % 2**31
            contribution = clip_and_noise(
                intervention,
                post.effects[intervention].mean,
                epsilon,
                delta,
                PrivacyBudget(  # dry-run against a copy; the spend lands in _apply
                    epsilon=budget.epsilon, delta=budget.delta, clip=budget.clip, spent=list(budget.spent)
                ),
                seed=int(seed),
                consent=patient.consent_aggregate,
            )
            event = {
                "type": "contribution_made",
                "patient_id": patient.patient_id,
                "trial_id": record.trial_id,
                "epsilon": epsilon,
                "delta": delta,
                "contribution": contribution.to_dict(),
                "schema_version": SCHEMA_VERSION,
            }
            self._commit("budget", event)
            eps_rem, delta_rem = self.state.budgets[patient.patient_id].remaining()
            return {
                "contribution": dict(contribution.to_dict(), schema_version=SCHEMA_VERSION),
                "budget_remaining": {"epsilon": eps_rem, "delta": delta_rem},
                "schema_version": SCHEMA_VERSION,
            }

    # -- aggregate-mode commands --------------------------------------------

    def accept_contribution(self, payload: Mapping) -> dict:
        self._require_mode("aggregate")
        with self._lock:
            body = dict(payload)
            extra = set(body) - CONTRIBUTION_KEYS
            if extra:
                raise ValidationError(
                    f"unexpected fields in contribution payload: {sorted(extra)}", field="contribution"
                )
            contribution = Contribution.from_dict(body)
            if not contribution.consent:
                raise ValidationError("contribution without consent flag refused", field="consent")
            if abs(contribution.estimate - max(-contribution.clip, min(contribution.clip, contribution.estimate))) > 20 * max(contribution.noise_sd, 1e-9):
                raise ValidationError("estimate implausibly far outside the clip range", field="estimate")
            event = {
                "type": "contribution_received",
                "contribution": contribution.to_dict(),
                "schema_version": SCHEMA_VERSION,
            }
            self._commit("contribution", event)
            return {"accepted": True, "total": len(self.state.contributions), "schema_version": SCHEMA_VERSION}

    def aggregate_prior(self) -> dict:
        self._require_mode("aggregate")
        result = aggregate_contributions(self.state.contributions, k_min=self.config.k_min)
        return dict(result.to_dict(), schema_version=SCHEMA_VERSION)
