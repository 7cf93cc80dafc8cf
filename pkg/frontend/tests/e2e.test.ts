// End-to-end against a live device-mode service: a scripted patient completes
// one 2-arm trial through the diary form logic, the clinician view's trigger
// table matches the bundled candidate fixture, and the displayed posterior
// numbers equal the API payloads exactly. Run with: npm run test:e2e

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { DeviceApi } from "../src/api.js";
import { emptyDiaryForm, newIdempotencyKey, toOutcomeRecord, validateDiaryForm } from "../src/diary.js";
import { OfflineQueue } from "../src/queue.js";
import { renderCandidateTable, renderPosterior, renderReport, renderAssignmentBanner } from "../src/views.js";
import type { RankResponse, TriggerDecision, TrialSummary } from "../src/types.js";

const PORT = 8600 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;
const PATIENT = "demo-patient";

let service: ChildProcess;
let dataDir: string;
const api = new DeviceApi(BASE);

async function waitForHealth(timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const health = await api.health();
      if (health.status === "ok") return;
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 300));
    }
  }
  throw new Error("device service did not come up");
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "nof1-e2e-"));
  service = spawn(
    "python3",
    ["-m", "nof1engine.service.cli", "serve", "--mode", "device", "--port", String(PORT), "--data-dir", dataDir],
    { cwd: join(import.meta.dirname, "..", ".."), stdio: "ignore" },
  );
  await waitForHealth();
});

afterAll(() => {
  service?.kill();
  if (dataDir) rmSync(dataDir, { recursive: true, force: true });
});

function dataValues(html: string): string[] {
  return [...html.matchAll(/data-value="([^"]*)"/g)].map((m) => m[1]);
}

describe("scripted patient against the live service", () => {
  let rank: RankResponse;
  let decision: TriggerDecision;
  let trial: TrialSummary;

  it("registers and ranks with the bundled fixture ordering", async () => {
    await api.registerPatient({
      patient_id: PATIENT,
      covariates: { age: 34, baseline_rate: 5.6, irregular_sleep: false, underrepresented_group: false },
      consent_aggregate: true,
    });
    rank = await api.rank({ patient_id: PATIENT, seed: 7 });
    expect(rank.candidates.map((c) => c.intervention_id)).toEqual([
      "magnesium",
      "sleep_regularity",
      "propranolol",
      "caffeine_reduction",
    ]);
  });

  it("clinician trigger table matches the fixture: two Yes, two No", async () => {
    const response = await api.decide({ patient_id: PATIENT, candidates: rank.candidates });
    decision = response.decision;
    expect(decision.kind).toBe("validate");
    expect(decision.validate_arms).toEqual(["magnesium", "sleep_regularity"]);

    const html = renderCandidateTable(rank.candidates, decision);
    const verdictByArm = [...html.matchAll(/data-arm="([^"]+)"[\s\S]*?trigger-verdict">(Yes|No)</g)].map(
      (m) => [m[1], m[2]],
    );
    expect(Object.fromEntries(verdictByArm)).toEqual({
      magnesium: "Yes",
      sleep_regularity: "Yes",
      propranolol: "No",
      caffeine_reduction: "No",
    });
  });

  it("completes a 2-arm trial via the diary form, washout days included", async () => {
    trial = await api.createTrial({
      patient_id: PATIENT,
      design: {
        arms: ["magnesium", "placebo"],
        n_periods: 2,
        period_len_days: 3,
        baseline_periods: 1,
        washout_days: 1,
        seed: 11,
      },
    });
    const lastDay = trial.schedule.phases.at(-1)!.end_day;
    expect(lastDay).toBe(10); // baseline 3 + period 3 + washout 1 + period 3

    const queue = new OfflineQueue();
    let sawWashout = false;
    for (let day = 1; day <= lastDay; day += 1) {
      const assignment = await api.assignment(trial.trial_id, day);
      const banner = renderAssignmentBanner(assignment, trial, true);
      for (const arm of trial.design.arms) {
        expect(banner).not.toContain(arm); // blinded patient view
      }
      if (assignment.assignment.kind === "washout") {
        sawWashout = true;
        expect(banner).toContain("Washout");
      }
      let form = emptyDiaryForm(day);
      form = { ...form, primaryEvent: day % 3 === 0, pain: (day * 2) % 10 };
      expect(validateDiaryForm(form, trial)).toEqual({});
      const record = toOutcomeRecord(form, trial.trial_id);
      queue.enqueue(record, newIdempotencyKey(record));
      const outcome = await queue.flush(api); // diary accepted on washout days too
      expect(outcome.remaining).toBe(0);
      expect(outcome.rejected).toEqual([]);
    }
    expect(sawWashout).toBe(true);
    trial = await api.trial(trial.trial_id);
    expect(trial.status).toBe("completed");
  });

  it("rejects an out-of-range diary day with the named field", async () => {
    const record = toOutcomeRecord(emptyDiaryForm(1), trial.trial_id);
    // bypass client validation to prove the server names the field
    try {
      await api.submitOutcome(trial.trial_id, { ...record, day: 999 }, "bad-day");
      expect.unreachable("server should reject");
    } catch (error: any) {
      // trial already completed: either state conflict or day range, both carry the envelope
      expect(["conflict", "validation_error"]).toContain(error.code);
    }
  });

  it("displays posterior and report numbers exactly as the API returns them", async () => {
    const posterior = await api.posterior(trial.trial_id);
    const posteriorHtml = renderPosterior(posterior);
    const shown = dataValues(posteriorHtml);
    expect(shown).toContain(String(posterior.posterior.effects.magnesium.mean));
    expect(shown).toContain(String(posterior.posterior.effects.magnesium.sd));
    for (const [, sigma] of Object.entries(posterior.prob_optimal ?? {})) {
      expect(shown).toContain(String(sigma));
    }

    const report = await api.report(trial.trial_id);
    const reportHtml = renderReport(report);
    const reportShown = dataValues(reportHtml);
    for (const row of report.arms) {
      expect(reportShown).toContain(String(row.effect_mean));
      expect(reportShown).toContain(String(row.ci95_low));
      expect(reportShown).toContain(String(row.ci95_high));
      expect(reportShown).toContain(String(row.prob_optimal));
      for (const p of Object.values(row.prob_reduction)) {
        expect(reportShown).toContain(String(p));
      }
    }
    expect(report.record_count).toBe(10);
  });

  it("contributes with consent through the documented endpoint", async () => {
    const result = (await api.contribute({ patient_id: PATIENT, trial_id: trial.trial_id })) as any;
    expect(result.contribution.intervention_id).toBe("magnesium");
    expect(result.budget_remaining.epsilon).toBeLessThan(4.0);
  });
});

describe("offline replay equals online entry", () => {
  // Same trial design on a second service: one copy entered online day by
  // day, the other queued offline and flushed once. Reports must agree.
  let offlineService: ChildProcess;
  let offlineDir: string;
  const OFFLINE_PORT = PORT + 1;
  const offlineApi = new DeviceApi(`http://127.0.0.1:${OFFLINE_PORT}`);

  beforeAll(async () => {
    offlineDir = mkdtempSync(join(tmpdir(), "nof1-e2e-off-"));
    offlineService = spawn(
      "python3",
      [
        "-m",
        "nof1engine.service.cli",
        "serve",
        "--mode",
        "device",
        "--port",
        String(OFFLINE_PORT),
        "--data-dir",
        offlineDir,
      ],
      { cwd: join(import.meta.dirname, "..", ".."), stdio: "ignore" },
    );
    const deadline = Date.now() + 60_000;
    for (;;) {
      try {
        await offlineApi.health();
        break;
      } catch {
        if (Date.now() > deadline) throw new Error("offline-twin service did not come up");
        await new Promise((resolve) => setTimeout(resolve, 300));
      }
    }
  });

  afterAll(() => {
    offlineService?.kill();
    if (offlineDir) rmSync(offlineDir, { recursive: true, force: true });
  });

  it("flushed queue produces the identical report", async () => {
    const design = {
      arms: ["magnesium", "placebo"],
      n_periods: 2,
      period_len_days: 2,
      baseline_periods: 1,
      seed: 21,
    };
    const mkRecords = (trialId: string, lastDay: number) =>
      Array.from({ length: lastDay }, (_, i) => ({
        trial_id: trialId,
        day: i + 1,
        primary_event: (i + 1) % 2 === 0,
        pain: (i + 3) % 10,
        source: "self_report" as const,
      }));

    // online twin, day by day
    await api.registerPatient({ patient_id: "twin", consent_aggregate: true });
    const onlineTrial = await api.createTrial({ patient_id: "twin", design, trial_id: "twin-trial" });
    const lastDay = onlineTrial.schedule.phases.at(-1)!.end_day;
    for (const record of mkRecords("twin-trial", lastDay)) {
      await api.submitOutcome("twin-trial", record, `on-${record.day}`);
    }
    const onlineReport = await api.report("twin-trial");

    // offline twin: everything queued (out of order), one flush
    await offlineApi.registerPatient({ patient_id: "twin", consent_aggregate: true });
    await offlineApi.createTrial({ patient_id: "twin", design, trial_id: "twin-trial" });
    const queue = new OfflineQueue();
    for (const record of mkRecords("twin-trial", lastDay).reverse()) {
      queue.enqueue(record, `off-${record.day}`);
    }
    const outcome = await queue.flush(offlineApi);
    expect(outcome.remaining).toBe(0);
    expect(outcome.rejected).toEqual([]);
    const offlineReport = await offlineApi.report("twin-trial");

    expect(offlineReport).toEqual(onlineReport);
  });
});
