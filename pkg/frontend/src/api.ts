/**
 * Typed client for the study service. Submissions retry with the identical
 * body on network failure; the server's idempotent log makes that safe.
 */

import type { Choice, NextResponse, Report, SubmitAck } from "./types.js";

export interface StudyApi {
  next(split: string, rater: string): Promise<NextResponse>;
  submit(itemId: string, rater: string, choice: Choice): Promise<SubmitAck>;
  report(split: string): Promise<Report>;
}

const SUBMIT_RETRIES = 3;
const RETRY_DELAY_MS = 250;

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export class HttpStudyApi implements StudyApi {
  constructor(private readonly baseUrl: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const res = await fetch(this.baseUrl + path);
    if (!res.ok) {
      throw new Error(`GET ${path}: ${res.status}`);
    }
    return (await res.json()) as T;
  }

  next(split: string, rater: string): Promise<NextResponse> {
    const q = new URLSearchParams({ rater });
    return this.getJson(`/api/study/${encodeURIComponent(split)}/next?${q}`);
  }

  async submit(itemId: string, rater: string, choice: Choice): Promise<SubmitAck> {
    const body = JSON.stringify({ item_id: itemId, rater, choice });
    let lastError: unknown;
    for (let attempt = 0; attempt <= SUBMIT_RETRIES; attempt++) {
      try {
        const res = await fetch(`${this.baseUrl}/api/study/submit`, {
          method: "POST",
          headers: { "content-type": "application/json" },
          body,
        });
        if (res.ok) {
          return (await res.json()) as SubmitAck;
        }
        // 4xx is a real protocol problem, not a transient failure
        throw new Error(`submit rejected: ${res.status}`);
      } catch (err) {
        lastError = err;
        if (err instanceof Error && err.message.startsWith("submit rejected")) {
          throw err;
        }
        if (attempt < SUBMIT_RETRIES) {
          await sleep(RETRY_DELAY_MS * (attempt + 1));
        }
      }
    }
    throw lastError instanceof Error ? lastError : new Error("submit failed");
  }

  report(split: string): Promise<Report> {
    return this.getJson(`/api/study/${encodeURIComponent(split)}/report`);
  }
}
