// Browser shell: wires the view renderers to the live device-mode API.
// Patient tab shows today's (blinded) assignment and the diary form; the
// clinician tab shows candidate ranking, trigger controls, posterior, and
// the report once the trial ends. Diary submissions go through the offline
// queue so a dropped connection never loses an entry.

import { ApiRequestError, DeviceApi } from "./api.js";
import {
  emptyDiaryForm,
  newIdempotencyKey,
  setPain,
  toOutcomeRecord,
  validateDiaryForm,
  type DiaryFormState,
} from "./diary.js";
import { OfflineQueue } from "./queue.js";
import {
  renderAlertFeed,
  renderAssignmentBanner,
  renderCandidateTable,
  renderContributeControl,
  renderDiaryForm,
  renderNextTrialAction,
  renderPosterior,
  renderReport,
  renderStoppingBanner,
  renderTriggerControls,
} from "./views.js";
import type { DecideResponse, RankResponse, TrialSummary } from "./types.js";

const api = new DeviceApi("");
const queue = new OfflineQueue();

interface AppState {
  patientId: string;
  trial: TrialSummary | null;
  rank: RankResponse | null;
  decision: DecideResponse | null;
  day: number;
  form: DiaryFormState;
  consent: boolean;
}

const state: AppState = {
  patientId: new URLSearchParams(location.search).get("patient") ?? "demo-patient",
  trial: null,
  rank: null,
  decision: null,
  day: 1,
  form: emptyDiaryForm(1),
  consent: false,
};

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

async function refreshPatientView(): Promise<void> {
  if (!state.trial) {
    el("patient-view").innerHTML = `<p>No active trial yet.</p>`;
    return;
  }
  const assignment = await api.assignment(state.trial.trial_id, state.day);
  el("patient-view").innerHTML =
    renderAssignmentBanner(assignment, state.trial, true) + renderDiaryForm(state.form);
  const form = el("patient-view").querySelector("form.diary");
  form?.addEventListener("submit", (event) => {
    event.preventDefault();
    void submitDiary();
  });
  form
    ?.querySelector('input[name="pain"]')
    ?.addEventListener("input", (event) => {
      state.form = setPain(state.form, Number((event.target as HTMLInputElement).value));
    });
  form
    ?.querySelector('input[name="primary_event"]')
    ?.addEventListener("change", (event) => {
      state.form = { ...state.form, primaryEvent: (event.target as HTMLInputElement).checked };
    });
}

async function submitDiary(): Promise<void> {
  if (!state.trial) return;
  const errors = validateDiaryForm(state.form, state.trial);
  if (Object.keys(errors).length > 0) {
    state.form = { ...state.form, fieldErrors: errors, status: "rejected" };
    await refreshPatientView();
    return;
  }
  const record = toOutcomeRecord(state.form, state.trial.trial_id);
  const key = newIdempotencyKey(record);
  state.form = { ...state.form, status: "submitting", fieldErrors: {} };
  try {
    const response = await api.submitOutcome(state.trial.trial_id, record, key);
    el("banner").innerHTML = renderStoppingBanner(response.verdict);
    state.trial = await api.trial(state.trial.trial_id);
    state.day = Math.min(response.day + 1, lastDay());
    state.form = { ...emptyDiaryForm(state.day), status: "accepted" };
  } catch (error) {
    if (error instanceof ApiRequestError) {
      state.form = {
        ...state.form,
        status: "rejected",
        fieldErrors: error.field ? { [error.field]: error.message } : { day: error.message },
      };
    } else {
      // offline: queue for replay with the same idempotency key
      queue.enqueue(record, key);
      state.form = { ...emptyDiaryForm(state.form.day + 1), status: "queued" };
    }
  }
  await refreshPatientView();
}

function lastDay(): number {
  const phases = state.trial?.schedule.phases ?? [];
  return phases.length ? phases[phases.length - 1].end_day : 1;
}

async function refreshClinicianView(): Promise<void> {
  const target = el("clinician-view");
  if (!state.rank || !state.decision) {
    target.innerHTML = `<p>Rank candidates to begin.</p>`;
    return;
  }
  let html =
    renderCandidateTable(state.rank.candidates, state.decision.decision) +
    renderTriggerControls(state.decision.decision, state.rank.candidates);
  if (state.trial) {
    const posterior = await api.posterior(state.trial.trial_id);
    html += renderPosterior(posterior) + renderAlertFeed(state.trial.alerts);
    if (state.trial.status !== "active") {
      const report = await api.report(state.trial.trial_id);
      html += renderReport(report) + renderContributeControl(state.consent);
      html += renderNextTrialAction(state.decision.decision);
    }
  }
  target.innerHTML = html;
  target.querySelector("button.start-trial")?.addEventListener("click", (event) => {
    const arms = (event.currentTarget as HTMLElement).dataset.arms?.split(",") ?? [];
    void startTrial(arms);
  });
  target.querySelector("input.consent-toggle")?.addEventListener("change", (event) => {
    state.consent = (event.target as HTMLInputElement).checked;
    void refreshClinicianView();
  });
  target.querySelector("button.contribute-button")?.addEventListener("click", () => {
    if (state.trial && state.consent) {
      void api.contribute({ patient_id: state.patientId, trial_id: state.trial.trial_id });
    }
  });
}

async function startTrial(arms: string[]): Promise<void> {
  state.trial = await api.createTrial({
    patient_id: state.patientId,
    design: { arms, n_periods: 6, period_len_days: 14 },
  });
  state.day = 1;
  state.form = emptyDiaryForm(1);
  await Promise.all([refreshPatientView(), refreshClinicianView()]);
}

async function boot(): Promise<void> {
  try {
    await api.registerPatient({ patient_id: state.patientId, consent_aggregate: true });
  } catch {
    // already registered or offline; both fine at boot
  }
  state.rank = await api.rank({ patient_id: state.patientId });
  state.decision = await api.decide({
    patient_id: state.patientId,
    candidates: state.rank.candidates,
  });
  await Promise.all([refreshPatientView(), refreshClinicianView()]);
  window.setInterval(() => {
    void queue.flush(api);
  }, 15_000);
}

void boot();
