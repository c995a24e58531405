import { ReviewApi, HttpError } from './api.js';
import { DecisionRequest } from './types.js';

export interface QueuedDecision {
  candidateId: string;
  body: DecisionRequest;
}

export interface OutboxStorage {
  load(): QueuedDecision[];
  save(entries: QueuedDecision[]): void;
}

/** Keeps queued decisions across reloads via localStorage. */
export class LocalOutboxStorage implements OutboxStorage {
  constructor(private readonly key = 'occlusionkit.outbox') {}

  load(): QueuedDecision[] {
    try {
      const raw = window.localStorage.getItem(this.key);
      return raw ? (JSON.parse(raw) as QueuedDecision[]) : [];
    } catch {
      return [];
    }
  }

  save(entries: QueuedDecision[]): void {
    window.localStorage.setItem(this.key, JSON.stringify(entries));
  }
}

export class MemoryOutboxStorage implements OutboxStorage {
  private entries: QueuedDecision[] = [];
  load(): QueuedDecision[] {
    return [...this.entries];
  }
  save(entries: QueuedDecision[]): void {
    this.entries = [...entries];
  }
}

/**
 * Holds decisions that could not reach the service and replays them later.
 *
 * Exactly-once behaviour rests on two legs: an entry is only removed after
 * the service acknowledges it, and every decision carries a decision_id the
 * service deduplicates on, so a retry after an ambiguous failure cannot
 * double-log.
 */
export class Outbox {
  private queue: QueuedDecision[];
  private replaying = false;

  constructor(
    private readonly api: ReviewApi,
    private readonly storage: OutboxStorage = new MemoryOutboxStorage(),
  ) {
    this.queue = this.storage.load();
  }

  get size(): number {
    return this.queue.length;
  }

  enqueue(entry: QueuedDecision): void {
    this.queue.push(entry);
    this.storage.save(this.queue);
  }

  /** Push queued decisions to the service; stops at the first network error. */
  async replay(): Promise<number> {
    if (this.replaying) return 0;
    this.replaying = true;
    let delivered = 0;
    try {
      while (this.queue.length > 0) {
        const entry = this.queue[0];
        try {
          await this.api.postDecision(entry.candidateId, entry.body);
        } catch (err) {
          if (err instanceof HttpError) {
            // the service saw and rejected it; dropping is the only sane move
            this.queue.shift();
            this.storage.save(this.queue);
            continue;
          }
          break; // still offline; keep the entry for the next replay
        }
        this.queue.shift();
        this.storage.save(this.queue);
        delivered += 1;
      }
    } finally {
      this.replaying = false;
    }
    return delivered;
  }
}
