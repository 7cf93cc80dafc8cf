// Wire types for the device-mode API (schema_version v1). The dashboard never
// recomputes statistics: these payloads are the single source of every
// displayed number.

export interface PatientProfile {
  patient_id: string;
  covariates?: Record<string, number | boolean | string>;
  contraindicated?: string[];
  consent_aggregate?: boolean;
}

export interface Candidate {
  intervention_id: string;
  prior_mean: number;
  prior_sd: number;
  efficacy: number;
  risk_tier: number;
  sigma: number | null;
}

export interface RankResponse {
  patient_id: string;
  candidates: Candidate[];
  samples: number;
  seed: number;
}

export interface TriggerDecision {
  kind: "direct_recommend" | "validate" | "no_action";
  intervention_id: string | null;
  validate_arms: string[];
  include_placebo: boolean;
  survivor_sigmas: Record<string, number>;
  flags: string[];
}

export interface DecideResponse {
  decision: TriggerDecision;
}

export interface Phase {
  kind: "baseline" | "washout" | "intervention";
  arm: string | null;
  start_day: number;
  end_day: number;
}

export interface TrialSummary {
  trial_id: string;
  patient_id: string;
  status: "active" | "stopped" | "completed";
  design: { arms: string[]; n_periods: number; period_len_days: number; seed: number };
  schedule: { phases: Phase[] };
  record_count: number;
  alerts: AlertEvent[];
}

export interface AssignmentResponse {
  trial_id: string;
  day: number;
  assignment: { kind: string; arm: string | null; phase_index: number | null };
  status: string;
}

export interface OutcomeRecord {
  trial_id: string;
  day: number;
  primary_event: boolean;
  pain?: number | null;
  disability?: number | null;
  medication_use?: boolean | null;
  source?: "self_report" | "wearable";
}

export interface StoppingVerdict {
  kind: "continue" | "stop" | "alert";
  day: number | null;
  reason: string | null;
}

export interface IngestResponse {
  trial_id: string;
  day: number;
  status: string;
  verdict: StoppingVerdict;
  alerts: AlertEvent[];
  idempotent_replay?: boolean;
}

export interface AlertEvent {
  rule_index: number;
  day: number;
  reason: string;
}

export interface GaussianDto {
  mean: number;
  sd: number;
}

export interface PosteriorResponse {
  trial_id: string;
  status: string;
  posterior: {
    reference_arm: string;
    arm_order: string[];
    effects: Record<string, GaussianDto>;
    reference_level: GaussianDto;
    sigma_y: number;
    period_len_days: number;
    carryover: GaussianDto | null;
  };
  prob_optimal: Record<string, number> | null;
  periods: unknown[];
}

export interface ReportArmRow {
  arm: string;
  is_reference: boolean;
  n_periods: number;
  effect_mean: number;
  effect_sd: number;
  ci95_low: number;
  ci95_high: number;
  prob_optimal: number;
  prob_reduction: Record<string, number>;
}

export interface ReportResponse {
  trial_id: string;
  status: string;
  stop_reason: string | null;
  stop_day: number | null;
  reference_arm: string;
  arms: ReportArmRow[];
  schedule: Phase[];
  missing_days: number;
  scheduled_days: number;
  observed_days: number;
  alerts: AlertEvent[];
  record_count: number;
}

export interface ApiError {
  code: string;
  message: string;
  field: string | null;
}
