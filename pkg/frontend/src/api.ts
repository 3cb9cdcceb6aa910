/**
 * Typed client for the QC review HTTP API. This is the only place the app
 * talks to the network; everything else works on the returned values.
 */

import type { Axis, OverlaySidecar, OverlaySource, Rating, StoredRating, SubjectSummary } from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

async function errorDetail(resp: Response): Promise<string> {
  try {
    const body = await resp.json();
    if (body && typeof body.detail === 'string') return body.detail;
    return JSON.stringify(body);
  } catch {
    return `${resp.status} ${resp.statusText}`;
  }
}

export interface SliceQuery {
  axis: Axis;
  index: number;
  window?: { min: number; max: number } | null;
}

export class ApiClient {
  constructor(private readonly base: string = '') {}

  private url(path: string, params?: Record<string, string | number>): string {
    const query = params
      ? '?' +
        Object.entries(params)
          .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`)
          .join('&')
      : '';
    return `${this.base}${path}${query}`;
  }

  private async getJson<T>(path: string, params?: Record<string, string | number>): Promise<T> {
    const resp = await fetch(this.url(path, params));
    if (!resp.ok) throw new ApiError(resp.status, await errorDetail(resp));
    return (await resp.json()) as T;
  }

  listSubjects(): Promise<SubjectSummary[]> {
    return this.getJson<SubjectSummary[]>('/api/subjects');
  }

  sliceUrl(subjectId: string, q: SliceQuery): string {
    const params: Record<string, string | number> = { axis: q.axis, index: q.index };
    if (q.window) {
      params.wmin = q.window.min;
      params.wmax = q.window.max;
    }
    return this.url(`/api/subjects/${encodeURIComponent(subjectId)}/slice`, params);
  }

  async fetchSlicePng(subjectId: string, q: SliceQuery): Promise<ArrayBuffer> {
    const resp = await fetch(this.sliceUrl(subjectId, q));
    if (!resp.ok) throw new ApiError(resp.status, await errorDetail(resp));
    return resp.arrayBuffer();
  }

  fetchOverlay(subjectId: string, q: SliceQuery, overlay: OverlaySource): Promise<OverlaySidecar> {
    return this.getJson<OverlaySidecar>(
      `/api/subjects/${encodeURIComponent(subjectId)}/slice/overlay`,
      { axis: q.axis, index: q.index, overlay },
    );
  }

  async submitRating(
    subjectId: string,
    body: { rating: Rating; affected_structures: string[]; rater: string; note: string },
  ): Promise<StoredRating> {
    const resp = await fetch(this.url(`/api/subjects/${encodeURIComponent(subjectId)}/rating`), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw new ApiError(resp.status, await errorDetail(resp));
    return (await resp.json()) as StoredRating;
  }

  async fetchRatingsCsv(): Promise<string> {
    const resp = await fetch(this.url('/api/ratings.csv'));
    if (!resp.ok) throw new ApiError(resp.status, await errorDetail(resp));
    return resp.text();
  }
}
