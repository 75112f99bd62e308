// Typed client for the review service. The UI keeps no authoritative
// state: everything it shows comes back out of these endpoints.

export interface ProgressEstimate {
  estimated_positives: number
  estimated_recall: number
  degenerate: boolean
}

export interface Progress {
  phase: string
  inspected: number
  found: number
  corpus_size: number
  curve: Array<[number, number]>
  estimate: ProgressEstimate | null
  stop_recommendation: string | null
  stopping_rule: string
  pending_recheck: number
}

export interface ReviewDoc {
  doc_id: string
  title: string
  body: string
  reason?: string
}

export interface NextBatch {
  documents: ReviewDoc[]
  stop_reason: string | null
}

export interface CorrectionReport {
  rechecked: number
  flips_to_relevant: number
  flips_to_irrelevant: number
  flipped_ids: string[]
}

export type LabelOutcome = Progress & { correction?: CorrectionReport }

export type LabelValue = 'relevant' | 'irrelevant'

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail)
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText
    try {
      const body = (await response.json()) as { detail?: string }
      if (body.detail) detail = body.detail
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail)
  }
  return (await response.json()) as T
}

export class ApiClient {
  constructor(
    private readonly base: string = '',
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  getProgress(sessionId: string): Promise<Progress> {
    return this.request(`/sessions/${sessionId}/progress`)
  }

  getNext(sessionId: string, reviewer: string, count = 1): Promise<NextBatch> {
    const query = new URLSearchParams({ reviewer, count: String(count) })
    return this.request(`/sessions/${sessionId}/next?${query}`)
  }

  postLabel(
    sessionId: string,
    body: { doc_id: string; reviewer: string; value: LabelValue; recheck?: boolean },
  ): Promise<LabelOutcome> {
    return this.request(`/sessions/${sessionId}/labels`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    })
  }

  buildRecheckQueue(
    sessionId: string,
    method: 'disagreement' | 'knee',
    budget: number,
  ): Promise<{ queued: Array<{ doc_id: string; reason: string; priority: number }> }> {
    return this.request(`/sessions/${sessionId}/recheck`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ method, budget }),
    })
  }

  nextRecheck(sessionId: string, count = 1): Promise<{ documents: ReviewDoc[] }> {
    return this.request(`/sessions/${sessionId}/recheck/next?count=${count}`)
  }

  private request<T>(path: string, init?: RequestInit): Promise<T> {
    return this.fetchFn(`${this.base}${path}`, init).then((r) => parseOrThrow<T>(r))
  }
}
