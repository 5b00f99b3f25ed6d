/**
 * Typed client for the assessment HTTP API. A per-runway sequence counter
 * lets callers discard answers that arrive after a newer request.
 */
import { isServiceError } from './types.js';
import type { AssessmentPayload, ServiceError, WhatIfRequest } from './types.js';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ServiceError,
  ) {
    super(body.message);
  }
}

export interface WhatIfResult {
  payload: AssessmentPayload;
  latencyMs: number;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private sequences = new Map<string, number>();

  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchImpl: FetchLike = fetch,
    private readonly now: () => number = () => Date.now(),
  ) {}

  nextSequence(runway: string): number {
    const next = (this.sequences.get(runway) ?? 0) + 1;
    this.sequences.set(runway, next);
    return next;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body: unknown = await resp.json();
    if (!resp.ok) {
      const err: ServiceError = isServiceError(body)
        ? body
        : { code: 'unknown', message: `HTTP ${resp.status}`, detail: '' };
      throw new ApiError(resp.status, err);
    }
    return body as T;
  }

  async runways(): Promise<string[]> {
    const body = await this.request<{ runways: string[] }>('/v1/runways');
    return body.runways;
  }

  async assessment(
    runway: string,
    at: string,
    threshold?: number,
  ): Promise<AssessmentPayload> {
    const params = new URLSearchParams({ at });
    if (threshold !== undefined) params.set('threshold', String(threshold));
    return this.request<AssessmentPayload>(
      `/v1/runways/${encodeURIComponent(runway)}/assessment?${params.toString()}`,
    );
  }

  /** POST the overrides and surface the edit-to-response latency. */
  async whatIf(req: WhatIfRequest): Promise<WhatIfResult> {
    const started = this.now();
    const payload = await this.request<AssessmentPayload>('/v1/whatif', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(req),
    });
    return { payload, latencyMs: this.now() - started };
  }

  async manifest(): Promise<Record<string, unknown>> {
    return this.request<Record<string, unknown>>('/v1/model/manifest');
  }
}
