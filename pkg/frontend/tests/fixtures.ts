// Shared payload fixtures mirroring the device API's wire format. The
// candidate table is the bundled demo fixture the service ships with.

import type {
  Candidate,
  PosteriorResponse,
  ReportResponse,
  TriggerDecision,
  TrialSummary,
} from "../src/types.js";

export const CANDIDATES: Candidate[] = [
  { intervention_id: "magnesium", prior_mean: -3.2, prior_sd: 1.1, efficacy: 0.72, risk_tier: 1, sigma: 0.3 },
  { intervention_id: "sleep_regularity", prior_mean: -2.8, prior_sd: 2.4, efficacy: 0.68, risk_tier: 1, sigma: 0.32 },
  { intervention_id: "propranolol", prior_mean: -2.5, prior_sd: 1.3, efficacy: 0.65, risk_tier: 2, sigma: 0.15 },
  { intervention_id: "caffeine_reduction", prior_mean: -2.1, prior_sd: 2.6, efficacy: 0.61, risk_tier: 1, sigma: 0.23 },
];

export const DECISION: TriggerDecision = {
  kind: "validate",
  intervention_id: null,
  validate_arms: ["magnesium", "sleep_regularity"],
  include_placebo: true,
  survivor_sigmas: {
    sleep_regularity: 0.32,
    magnesium: 0.3,
    caffeine_reduction: 0.23,
    propranolol: 0.15,
  },
  flags: ["low-reliability recommendation: top candidate sigma 0.320"],
};

export const TRIAL: TrialSummary = {
  trial_id: "trial-00001",
  patient_id: "demo-patient",
  status: "active",
  design: { arms: ["magnesium", "sleep_regularity", "placebo"], n_periods: 6, period_len_days: 14, seed: 5 },
  schedule: {
    phases: [
      { kind: "baseline", arm: null, start_day: 1, end_day: 14 },
      { kind: "intervention", arm: "sleep_regularity", start_day: 15, end_day: 28 },
      { kind: "intervention", arm: "magnesium", start_day: 29, end_day: 42 },
      { kind: "intervention", arm: "placebo", start_day: 43, end_day: 56 },
      { kind: "intervention", arm: "magnesium", start_day: 57, end_day: 70 },
      { kind: "intervention", arm: "placebo", start_day: 71, end_day: 84 },
      { kind: "intervention", arm: "sleep_regularity", start_day: 85, end_day: 98 },
    ],
  },
  record_count: 0,
  alerts: [],
};

export const POSTERIOR: PosteriorResponse = {
  trial_id: "trial-00001",
  status: "completed",
  posterior: {
    reference_arm: "placebo",
    arm_order: ["placebo", "magnesium", "sleep_regularity"],
    effects: {
      magnesium: { mean: -3.1085821, sd: 0.8590741 },
      sleep_regularity: { mean: -1.9070913, sd: 1.0931175 },
    },
    reference_level: { mean: 5.642881, sd: 0.7312019 },
    sigma_y: 1.5,
    period_len_days: 14,
    carryover: null,
  },
  prob_optimal: { placebo: 0.00912, magnesium: 0.81455, sleep_regularity: 0.17633 },
  periods: [],
};

export const REPORT: ReportResponse = {
  trial_id: "trial-00001",
  status: "completed",
  stop_reason: null,
  stop_day: null,
  reference_arm: "placebo",
  arms: [
    {
      arm: "placebo",
      is_reference: true,
      n_periods: 2,
      effect_mean: 0,
      effect_sd: 0,
      ci95_low: 0,
      ci95_high: 0,
      prob_optimal: 0.00912,
      prob_reduction: { "2_per_month": 0 },
    },
    {
      arm: "magnesium",
      is_reference: false,
      n_periods: 2,
      effect_mean: -3.1085821,
      effect_sd: 0.8590741,
      ci95_low: -4.7923364,
      ci95_high: -1.4248278,
      prob_optimal: 0.81455,
      prob_reduction: { "2_per_month": 0.9943216 },
    },
    {
      arm: "sleep_regularity",
      is_reference: false,
      n_periods: 2,
      effect_mean: -1.9070913,
      effect_sd: 1.0931175,
      ci95_low: -4.0495622,
      ci95_high: 0.2353796,
      prob_optimal: 0.17633,
      prob_reduction: { "2_per_month": 0.8136901 },
    },
  ],
  schedule: TRIAL.schedule.phases,
  missing_days: 3,
  scheduled_days: 98,
  observed_days: 95,
  alerts: [{ rule_index: 0, day: 20, reason: "pain >= 8 for 2 consecutive days" }],
  record_count: 95,
};
