import { CandidatePage, DecisionRequest, DecisionResponse, FetchLike } from './types.js';

export class HttpError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
  }
}

/** Thin typed client over the review service's HTTP API. */
export class ReviewApi {
  constructor(
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
    private readonly base: string = '',
  ) {}

  async listPending(limit = 50, after?: string): Promise<CandidatePage> {
    const params = new URLSearchParams({ status: 'pending', limit: String(limit) });
    if (after) params.set('after', after);
    const res = await this.fetchFn(`${this.base}/api/candidates?${params}`);
    if (!res.ok) throw new HttpError(res.status, `list failed: ${res.status}`);
    return (await res.json()) as CandidatePage;
  }

  frameUrl(candidateId: string, frame: number, overlay: boolean): string {
    const mode = overlay ? 'mask' : 'none';
    return `${this.base}/api/candidates/${candidateId}/frames/${frame}?overlay=${mode}`;
  }

  async postDecision(candidateId: string, body: DecisionRequest): Promise<DecisionResponse> {
    const res = await this.fetchFn(`${this.base}/api/candidates/${candidateId}/decision`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw new HttpError(res.status, `decision failed: ${res.status}`);
    return (await res.json()) as DecisionResponse;
  }
}
