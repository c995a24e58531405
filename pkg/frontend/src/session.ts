import { ReviewApi, HttpError } from './api.js';
import { Outbox } from './outbox.js';
import { CandidateSummary, DecisionRequest, ReasonCode, Verdict } from './types.js';

export interface HistoryEntry {
  candidateId: string;
  verdict: Verdict;
  state: 'delivered' | 'queued' | 'dropped';
}

export interface SessionEvents {
  onChange?: () => void;
  onNotice?: (message: string) => void;
}

function randomId(): string {
  const c = globalThis.crypto as Crypto | undefined;
  if (c && 'randomUUID' in c) return c.randomUUID();
  return `d-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

/**
 * Queue-driven review state. The queue always mirrors the service's pending
 * list; every decision advances the cursor optimistically and the POST
 * settles in the background. A 409 re-syncs the queue from the service; a
 * network failure parks the decision in the outbox for replay.
 */
export class ReviewSession {
  queue: CandidateSummary[] = [];
  cursor = 0;
  frameIndex = 0;
  overlay = false;
  history: HistoryEntry[] = [];
  reviewer = 'reviewer';
  notice: string | null = null;

  private revisions = new Map<string, number>();
  private inflight: Promise<void>[] = [];

  constructor(
    private readonly api: ReviewApi,
    readonly outbox: Outbox,
    private readonly events: SessionEvents = {},
  ) {}

  get current(): CandidateSummary | null {
    return this.cursor < this.queue.length ? this.queue[this.cursor] : null;
  }

  get reviewedCount(): number {
    return this.history.length;
  }

  private changed(): void {
    this.events.onChange?.();
  }

  async load(): Promise<void> {
    const page = await this.api.listPending(200);
    this.queue = page.items;
    this.cursor = 0;
    this.frameIndex = 0;
    this.notice = null;
    this.changed();
  }

  /** Re-sync the queue from the service, keeping already-decided ids out. */
  async resync(): Promise<void> {
    const decided = new Set(this.history.map((h) => h.candidateId));
    const page = await this.api.listPending(200);
    this.queue = page.items.filter((c) => !decided.has(c.candidate_id));
    this.cursor = 0;
    this.frameIndex = 0;
    this.changed();
  }

  toggleOverlay(): void {
    this.overlay = !this.overlay;
    this.changed();
  }

  scrub(delta: number): void {
    const cand = this.current;
    if (!cand) return;
    const max = cand.frame_count - 1;
    this.frameIndex = Math.min(max, Math.max(0, this.frameIndex + delta));
    this.changed();
  }

  frameUrl(): string | null {
    const cand = this.current;
    if (!cand) return null;
    return this.api.frameUrl(cand.candidate_id, this.frameIndex, this.overlay);
  }

  decide(verdict: Verdict, reason?: ReasonCode): void {
    const cand = this.current;
    if (!cand) return;
    const body: DecisionRequest = {
      verdict,
      reviewer: this.reviewer,
      decision_id: randomId(),
      expected_revision: this.revisions.get(cand.candidate_id) ?? 0,
    };
    if (reason) body.reason_code = reason;

    // optimistic advance: the next candidate is reviewable immediately
    this.cursor += 1;
    this.frameIndex = 0;
    this.notice = null;
    this.changed();

    const settle = this.submit(cand, body);
    this.inflight.push(settle);
    settle.finally(() => {
      this.inflight = this.inflight.filter((p) => p !== settle);
    });
  }

  private async submit(cand: CandidateSummary, body: DecisionRequest): Promise<void> {
    try {
      const res = await this.api.postDecision(cand.candidate_id, body);
      this.revisions.set(cand.candidate_id, res.revision);
      this.history.push({ candidateId: cand.candidate_id, verdict: body.verdict, state: 'delivered' });
      this.changed();
    } catch (err) {
      if (err instanceof HttpError && err.status === 409) {
        // someone else decided it; roll back our optimistic advance and re-sync
        this.events.onNotice?.(`conflict on ${cand.candidate_id}; queue re-synced`);
        this.notice = `conflict on ${cand.candidate_id}`;
        await this.resync();
      } else if (err instanceof HttpError) {
        this.history.push({ candidateId: cand.candidate_id, verdict: body.verdict, state: 'dropped' });
        this.notice = `service rejected decision for ${cand.candidate_id} (${err.status})`;
        this.changed();
      } else {
        // network failure: park it; replay happens on reconnect
        this.outbox.enqueue({ candidateId: cand.candidate_id, body });
        this.history.push({ candidateId: cand.candidate_id, verdict: body.verdict, state: 'queued' });
        this.notice = 'offline: decision queued for replay';
        this.changed();
      }
    }
  }

  /** Resolves when every fired decision has settled (delivered, queued, or dropped). */
  async flush(): Promise<void> {
    while (this.inflight.length > 0) {
      await Promise.all([...this.inflight]);
    }
  }

  async reconnect(): Promise<number> {
    const delivered = await this.outbox.replay();
    if (delivered > 0) {
      for (const h of this.history) {
        if (h.state === 'queued') h.state = 'delivered';
      }
      this.notice = `replayed ${delivered} queued decision(s)`;
      this.changed();
    }
    return delivered;
  }
}
