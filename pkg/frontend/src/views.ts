// HTML-producing view functions. Pure string renderers keep the dashboard
// testable without a browser and make one invariant easy to enforce: every
// displayed number is the exact payload value (String(x), no client-side
// arithmetic or rounding), carried in both the text and a data-value
// attribute.

import { describeAssignment } from "./blinding.js";
import type { DiaryFormState } from "./diary.js";
import type {
  AlertEvent,
  AssignmentResponse,
  Candidate,
  PosteriorResponse,
  ReportResponse,
  StoppingVerdict,
  TriggerDecision,
  TrialSummary,
} from "./types.js";

export function escapeHtml(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

function num(value: number | null | undefined): string {
  // exact payload value; no rounding
  const text = escapeHtml(value ?? "");
  return `<span class="num" data-value="${text}">${text}</span>`;
}

function pct(value: number): string {
  // probability gauge: width is presentation-only, the number stays exact
  const width = Math.round(Math.min(1, Math.max(0, value)) * 100);
  return `<div class="gauge"><div class="gauge-fill" style="width:${width}%"></div>${num(value)}</div>`;
}

// -- patient views -----------------------------------------------------------

export function renderAssignmentBanner(
  assignment: AssignmentResponse,
  trial: TrialSummary,
  blinded = true,
): string {
  const display = describeAssignment(
    assignment.assignment.kind,
    assignment.assignment.arm,
    trial.design.arms,
    blinded,
  );
  const stopped =
    trial.status === "stopped"
      ? `<div class="banner banner-stopped" role="alert">Trial stopped. Your care team has been notified.</div>`
      : "";
  return `
  <section class="assignment" data-day="${assignment.day}">
    ${stopped}
    <h2>Day ${assignment.day}: ${escapeHtml(display.headline)}</h2>
    <p>${escapeHtml(display.detail)}</p>
  </section>`;
}

export function renderDiaryForm(state: DiaryFormState): string {
  const error = (field: string) =>
    state.fieldErrors[field]
      ? `<p class="field-error" data-field="${field}">${escapeHtml(state.fieldErrors[field])}</p>`
      : "";
  return `
  <form class="diary" data-day="${state.day}" data-status="${state.status}">
    <h3>Daily diary, day ${state.day}</h3>
    <label>Event day?
      <input type="checkbox" name="primary_event" ${state.primaryEvent ? "checked" : ""} />
    </label>
    ${error("record.day")}${error("day")}
    <label>Pain (0-10)
      <input type="range" name="pain" min="0" max="10" step="1" value="${state.pain ?? 0}" />
      <output>${state.pain ?? "-"}</output>
    </label>
    ${error("pain")}
    <label>Functional disability (optional)
      <input type="number" name="disability" value="${state.disability ?? ""}" />
    </label>
    <label>Rescue medication used?
      <input type="checkbox" name="medication_use" ${state.medicationUse ? "checked" : ""} />
    </label>
    <button type="submit" ${state.status === "submitting" ? "disabled" : ""}>Save entry</button>
    <span class="status">${state.status}</span>
  </form>`;
}

export function renderStoppingBanner(verdict: StoppingVerdict): string {
  if (verdict.kind === "stop") {
    return `<div class="banner banner-stopped" role="alert">Trial stopped on day ${verdict.day}: ${escapeHtml(verdict.reason)}</div>`;
  }
  if (verdict.kind === "alert") {
    return `<div class="banner banner-alert" role="alert">Safety alert: ${escapeHtml(verdict.reason)}. Your care team has been notified; the trial continues.</div>`;
  }
  return "";
}

// -- clinician views ----------------------------------------------------------

export function renderCandidateTable(candidates: Candidate[], decision: TriggerDecision): string {
  const rows = candidates
    .map((candidate) => {
      const triggered = decision.validate_arms.includes(candidate.intervention_id);
      return `
      <tr data-arm="${escapeHtml(candidate.intervention_id)}">
        <td>${escapeHtml(candidate.intervention_id)}</td>
        <td>${num(candidate.efficacy)}</td>
        <td>${num(candidate.sigma)}</td>
        <td>tier ${candidate.risk_tier}</td>
        <td class="trigger-verdict">${triggered ? "Yes" : "No"}</td>
      </tr>`;
    })
    .join("");
  return `
  <table class="candidates">
    <thead>
      <tr><th>Intervention</th><th>Predicted efficacy</th><th>P(optimal)</th><th>Risk</th><th>Trigger N-of-1?</th></tr>
    </thead>
    <tbody>${rows}</tbody>
  </table>`;
}

/** Tier-2 validations need an explicit approval click before the trial is
 * created; denied (tier-3) interventions never get a control at all. */
export function renderTriggerControls(
  decision: TriggerDecision,
  candidates: Candidate[],
): string {
  const flags = decision.flags
    .map((flag) => `<li class="flag">${escapeHtml(flag)}</li>`)
    .join("");
  const tierOf = new Map(candidates.map((c) => [c.intervention_id, c.risk_tier]));
  let action = "";
  if (decision.kind === "validate") {
    const arms = [...decision.validate_arms, ...(decision.include_placebo ? ["placebo"] : [])];
    const eligible = decision.validate_arms.every((arm) => (tierOf.get(arm) ?? 3) !== 3);
    const needsApproval = decision.validate_arms.some((arm) => tierOf.get(arm) === 2);
    if (eligible) {
      action = `
      <button class="start-trial" data-arms="${escapeHtml(arms.join(","))}"
              data-needs-approval="${needsApproval}">
        ${needsApproval ? "Approve and start trial (clinical oversight)" : "Start N-of-1 trial"}
      </button>`;
    }
  } else if (decision.kind === "direct_recommend") {
    action = `<p class="direct">Direct recommendation: <strong>${escapeHtml(decision.intervention_id)}</strong></p>`;
  } else {
    action = `<p class="no-action">No automatic action: refer for clinician review.</p>`;
  }
  return `<section class="trigger-controls">${action}<ul class="flags">${flags}</ul></section>`;
}

export function renderPosterior(posterior: PosteriorResponse): string {
  const arms = posterior.posterior.arm_order;
  const rows = arms
    .map((arm) => {
      const effect =
        arm === posterior.posterior.reference_arm
          ? { mean: 0, sd: 0 }
          : posterior.posterior.effects[arm];
      const sigma = posterior.prob_optimal?.[arm];
      return `
      <tr data-arm="${escapeHtml(arm)}">
        <td>${escapeHtml(arm)}${arm === posterior.posterior.reference_arm ? " (reference)" : ""}</td>
        <td>${num(effect.mean)}</td>
        <td>${num(effect.sd)}</td>
        <td>${sigma === undefined ? "" : pct(sigma)}</td>
      </tr>`;
    })
    .join("");
  return `
  <table class="posterior" data-status="${escapeHtml(posterior.status)}">
    <thead><tr><th>Arm</th><th>Effect mean</th><th>Effect sd</th><th>P(best)</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

export function renderReport(report: ReportResponse): string {
  const stop =
    report.status === "stopped"
      ? `<div class="banner banner-stopped">Stopped day ${report.stop_day}: ${escapeHtml(report.stop_reason)}</div>`
      : "";
  const rows = report.arms
    .map((row) => {
      const reductions = Object.entries(row.prob_reduction)
        .map(
          ([key, value]) =>
            `<div class="reduction" data-threshold="${escapeHtml(key)}">P(reduction &ge; ${escapeHtml(key).replace("_per_month", "/month")}) ${pct(value)}</div>`,
        )
        .join("");
      return `
      <tr data-arm="${escapeHtml(row.arm)}">
        <td>${escapeHtml(row.arm)}${row.is_reference ? " (reference)" : ""}</td>
        <td>${num(row.n_periods)}</td>
        <td>${num(row.effect_mean)} <span class="ci">[${num(row.ci95_low)}, ${num(row.ci95_high)}]</span></td>
        <td>${pct(row.prob_optimal)}</td>
        <td>${reductions}</td>
      </tr>`;
    })
    .join("");
  const alerts = renderAlertFeed(report.alerts);
  return `
  <section class="report" data-trial="${escapeHtml(report.trial_id)}" data-status="${escapeHtml(report.status)}">
    ${stop}
    <h2>Trial ${escapeHtml(report.trial_id)} report (${escapeHtml(report.status)})</h2>
    <p>Observed ${num(report.observed_days)} of ${num(report.scheduled_days)} scheduled days
       (${num(report.missing_days)} missing).</p>
    <table class="report-arms">
      <thead><tr><th>Arm</th><th>Periods</th><th>Effect (95% CI)</th><th>P(best)</th><th>Reduction probabilities</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
    ${alerts}
  </section>`;
}

export function renderAlertFeed(alerts: AlertEvent[]): string {
  if (alerts.length === 0) {
    return `<p class="alert-feed-empty">No safety alerts.</p>`;
  }
  const items = alerts
    .map((a) => `<li class="alert" data-day="${a.day}">Day ${a.day}: ${escapeHtml(a.reason)}</li>`)
    .join("");
  return `<ul class="alert-feed">${items}</ul>`;
}

export function renderContributeControl(consent: boolean): string {
  return `
  <section class="contribute">
    <label><input type="checkbox" class="consent-toggle" ${consent ? "checked" : ""} />
      Share an anonymized, noise-protected effect estimate to improve future recommendations</label>
    <button class="contribute-button" ${consent ? "" : "disabled"}>Contribute result</button>
  </section>`;
}

/** Post-trial clinician action: start the next trial pre-filled with the next
 * validation set. */
export function renderNextTrialAction(decision: TriggerDecision): string {
  if (decision.kind !== "validate" || decision.validate_arms.length === 0) {
    return `<p class="next-trial-none">No further candidates meet the validation threshold.</p>`;
  }
  const arms = [...decision.validate_arms, ...(decision.include_placebo ? ["placebo"] : [])];
  return `
  <button class="next-trial" data-arms="${escapeHtml(arms.join(","))}">
    Start next trial: ${escapeHtml(decision.validate_arms.join(" vs "))}
  </button>`;
}
