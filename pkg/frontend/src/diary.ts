// Diary form state and validation. The pain control is a 0-10 slider so the
// bound holds by construction; day-range validation mirrors the server rule
// so out-of-range submissions never leave the device.

import type { OutcomeRecord, TrialSummary } from "./types.js";

export type SubmissionStatus = "idle" | "queued" | "submitting" | "accepted" | "rejected";

export interface DiaryFormState {
  day: number;
  primaryEvent: boolean;
  pain: number | null;
  disability: number | null;
  medicationUse: boolean | null;
  status: SubmissionStatus;
  fieldErrors: Record<string, string>;
}

export function emptyDiaryForm(day: number): DiaryFormState {
  return {
    day,
    primaryEvent: false,
    pain: null,
    disability: null,
    medicationUse: null,
    status: "idle",
    fieldErrors: {},
  };
}

export function setPain(state: DiaryFormState, value: number): DiaryFormState {
  // slider semantics: clamp instead of reject
  const pain = Math.min(10, Math.max(0, Math.round(value)));
  return { ...state, pain };
}

export function trialDayRange(trial: TrialSummary): { first: number; last: number } {
  const phases = trial.schedule.phases;
  return { first: phases[0].start_day, last: phases[phases.length - 1].end_day };
}

export function validateDiaryForm(state: DiaryFormState, trial: TrialSummary): Record<string, string> {
  const errors: Record<string, string> = {};
  const { first, last } = trialDayRange(trial);
  if (state.day < first || state.day > last) {
    errors.day = `day must be between ${first} and ${last}`;
  }
  if (trial.status !== "active") {
    errors.day = `trial is ${trial.status}; the diary is closed`;
  }
  if (state.pain !== null && (state.pain < 0 || state.pain > 10)) {
    errors.pain = "pain must be between 0 and 10";
  }
  return errors;
}

export function toOutcomeRecord(state: DiaryFormState, trialId: string): OutcomeRecord {
  return {
    trial_id: trialId,
    day: state.day,
    primary_event: state.primaryEvent,
    pain: state.pain,
    disability: state.disability,
    medication_use: state.medicationUse,
    source: "self_report",
  };
}

let submissionCounter = 0;

export function resetIdempotencyCounter(): void {
  submissionCounter = 0;
}

/** Stable per-submission key: retries of the same submission reuse it, a
 * fresh correction for the same day gets a new one. */
export function newIdempotencyKey(record: OutcomeRecord): string {
  submissionCounter += 1;
  return `diary-${record.day}-${record.source ?? "self_report"}-${submissionCounter}`;
}
