// Thin typed client over the device-mode HTTP API. Fetch is injectable so
// tests can run without a network and the offline queue can intercept
// failures uniformly.

import type {
  ApiError,
  AssignmentResponse,
  DecideResponse,
  IngestResponse,
  OutcomeRecord,
  PatientProfile,
  PosteriorResponse,
  RankResponse,
  ReportResponse,
  TrialSummary,
} from "./types.js";

export class ApiRequestError extends Error {
  readonly code: string;
  readonly field: string | null;
  readonly status: number;

  constructor(status: number, body: ApiError) {
    super(body.message);
    this.status = status;
    this.code = body.code;
    this.field = body.field;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class DeviceApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiRequestError(response.status, payload as ApiError);
    }
    return payload as T;
  }

  health(): Promise<{ status: string; mode: string }> {
    return this.request("GET", "/v1/health");
  }

  registerPatient(profile: PatientProfile): Promise<PatientProfile> {
    return this.request("POST", "/v1/patients", profile);
  }

  rank(body: { patient_id?: string; profile?: PatientProfile; samples?: number; seed?: number }): Promise<RankResponse> {
    return this.request("POST", "/v1/candidates/rank", body);
  }

  decide(body: {
    patient_id?: string;
    profile?: PatientProfile;
    candidates?: unknown[];
    policy?: Record<string, unknown>;
    seed?: number;
  }): Promise<DecideResponse> {
    return this.request("POST", "/v1/trigger/decide", body);
  }

  createTrial(body: { patient_id: string; design: Record<string, unknown>; trial_id?: string }): Promise<TrialSummary> {
    return this.request("POST", "/v1/trials", body);
  }

  trial(trialId: string): Promise<TrialSummary> {
    return this.request("GET", `/v1/trials/${trialId}`);
  }

  assignment(trialId: string, day: number): Promise<AssignmentResponse> {
    return this.request("GET", `/v1/trials/${trialId}/assignment?day=${day}`);
  }

  submitOutcome(trialId: string, record: OutcomeRecord, idempotencyKey: string): Promise<IngestResponse> {
    return this.request("POST", `/v1/trials/${trialId}/outcomes`, {
      record,
      idempotency_key: idempotencyKey,
    });
  }

  posterior(trialId: string): Promise<PosteriorResponse> {
    return this.request("GET", `/v1/trials/${trialId}/posterior`);
  }

  report(trialId: string): Promise<ReportResponse> {
    return this.request("GET", `/v1/trials/${trialId}/report`);
  }

  contribute(body: {
    patient_id: string;
    trial_id: string;
    intervention_id?: string;
    epsilon?: number;
    delta?: number;
  }): Promise<unknown> {
    return this.request("POST", "/v1/privacy/contribute", body);
  }
}
