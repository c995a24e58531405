export interface CandidateSummary {
  candidate_id: string;
  frame_count: number;
  strategy: string;
  occlusion_rates: number[];
  checks: Record<string, number>;
  thumbnail_url: string;
}

export interface CandidatePage {
  items: CandidateSummary[];
  next: string | null;
}

export type Verdict = 'accept' | 'reject';
export type ReasonCode = 'occluded' | 'bad_mask' | 'other';

export interface DecisionRequest {
  verdict: Verdict;
  reviewer: string;
  reason_code?: ReasonCode;
  reason_text?: string;
  decision_id: string;
  expected_revision?: number;
}

export interface DecisionResponse {
  candidate_id: string;
  verdict: string;
  revision: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;
