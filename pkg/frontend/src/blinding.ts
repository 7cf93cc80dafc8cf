// Blinded arm labels for patient-facing views. The placebo arm implies the
// patient must not learn which plan is which, so every intervention arm
// (placebo included) maps to "Plan A/B/C..." in the order the trial's design
// declares its arms. Clinician views show true arm names.

const LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";

export function blindedLabels(arms: string[]): Map<string, string> {
  const labels = new Map<string, string>();
  arms.forEach((arm, i) => labels.set(arm, `Plan ${LETTERS[i % LETTERS.length]}`));
  return labels;
}

export interface AssignmentDisplay {
  headline: string;
  detail: string;
}

export function describeAssignment(
  kind: string,
  arm: string | null,
  arms: string[],
  blinded: boolean,
): AssignmentDisplay {
  if (kind === "baseline") {
    return { headline: "Baseline", detail: "No intervention today: record your usual day." };
  }
  if (kind === "washout") {
    return { headline: "Washout", detail: "Between plans today. Keep the diary going." };
  }
  if (kind === "post_trial") {
    return { headline: "Trial finished", detail: "No more diary entries are scheduled." };
  }
  if (arm === null) {
    return { headline: "Unscheduled", detail: "No assignment for this day." };
  }
  const label = blinded ? blindedLabels(arms).get(arm) ?? "Plan ?" : arm;
  return { headline: label, detail: `Follow ${label} today.` };
}
