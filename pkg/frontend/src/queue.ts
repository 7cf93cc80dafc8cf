// Offline-first submission queue: diary entries survive network failures and
// replay strictly in day order with their original idempotency keys, so
// at-least-once delivery still mutates server state at most once per entry.

import type { DeviceApi } from "./api.js";
import { ApiRequestError } from "./api.js";
import type { IngestResponse, OutcomeRecord } from "./types.js";

export interface QueuedSubmission {
  record: OutcomeRecord;
  idempotencyKey: string;
  attempts: number;
}

export interface FlushOutcome {
  delivered: IngestResponse[];
  rejected: { submission: QueuedSubmission; error: ApiRequestError }[];
  remaining: number;
}

export class OfflineQueue {
  private items: QueuedSubmission[] = [];

  enqueue(record: OutcomeRecord, idempotencyKey: string): void {
    this.items.push({ record, idempotencyKey, attempts: 0 });
    // strict day order regardless of entry order; stable for same-day corrections
    this.items.sort((a, b) => a.record.day - b.record.day);
  }

  get size(): number {
    return this.items.length;
  }

  pending(): readonly QueuedSubmission[] {
    return this.items;
  }

  /** Deliver queued entries in order. A network failure stops the flush and
   * keeps the entry (and everything behind it) for the next attempt; a
   * server-side validation rejection drops the entry and surfaces it. */
  async flush(api: DeviceApi): Promise<FlushOutcome> {
    const delivered: IngestResponse[] = [];
    const rejected: FlushOutcome["rejected"] = [];
    while (this.items.length > 0) {
      const next = this.items[0];
      next.attempts += 1;
      try {
        const response = await api.submitOutcome(
          next.record.trial_id,
          next.record,
          next.idempotencyKey,
        );
        delivered.push(response);
        this.items.shift();
      } catch (error) {
        if (error instanceof ApiRequestError) {
          rejected.push({ submission: next, error });
          this.items.shift();
          continue;
        }
        break; // offline: retry later, order preserved
      }
    }
    return { delivered, rejected, remaining: this.items.length };
  }
}
