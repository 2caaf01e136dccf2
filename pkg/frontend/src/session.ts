/**
 * Rater session state machine: fetch the next item, accept exactly one
 * choice per item, advance. Holds only blinded data; totals come from the
 * server's progress counters so replays never double-count.
 */

import type { StudyApi } from "./api.js";
import type { Choice, Progress, StudyItemPayload } from "./types.js";
import { isDone } from "./types.js";

export type SessionState = "loading" | "rating" | "done" | "error";

export interface SessionTally {
  first: number;
  second: number;
  neither: number;
}

export class RaterSession {
  state: SessionState = "loading";
  current: StudyItemPayload | null = null;
  progress: Progress = { completed: 0, total: 0 };
  tally: SessionTally = { first: 0, second: 0, neither: 0 };
  lastError: string | null = null;
  private inFlight = false;

  constructor(
    private readonly api: StudyApi,
    readonly split: string,
    readonly raterId: string,
  ) {}

  async start(): Promise<void> {
    await this.advance();
  }

  private async advance(): Promise<void> {
    this.state = "loading";
    try {
      const next = await this.api.next(this.split, this.raterId);
      this.progress = next.progress;
      if (isDone(next)) {
        this.current = null;
        this.state = "done";
      } else {
        this.current = next;
        this.state = "rating";
      }
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      this.state = "error";
    }
  }

  /**
   * Submit a choice for the current item and move on. Calls while a
   * submission is in flight (double-clicks) are ignored; a duplicate ack
   * from the server advances without counting anything twice.
   */
  async choose(choice: Choice): Promise<void> {
    if (this.state !== "rating" || this.current === null || this.inFlight) {
      return;
    }
    this.inFlight = true;
    try {
      const ack = await this.api.submit(this.current.item_id, this.raterId, choice);
      if (ack.status === "recorded") {
        this.tally[choice] += 1;
      }
      await this.advance();
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      this.state = "error";
    } finally {
      this.inFlight = false;
    }
  }
}
