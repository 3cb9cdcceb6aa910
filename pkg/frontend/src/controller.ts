/**
 * Submission flow, DOM-free so the ack/no-ack contract is unit-testable:
 * the state is only advanced through applyRatingAck after a 2xx response.
 * Any failure returns the input state untouched, draft included.
 */

import type { ApiClient } from './api.js';
import type { StoredRating, SubjectSummary } from './types.js';
import { applyRatingAck, type ViewerState } from './state.js';

export type SubmitOutcome =
  | { ok: true; state: ViewerState; stored: StoredRating }
  | { ok: false; state: ViewerState; error: string };

export async function submitRating(client: ApiClient, state: ViewerState): Promise<SubmitOutcome> {
  if (!state.subject) return { ok: false, state, error: 'no subject selected' };
  if (!state.draft.rating) return { ok: false, state, error: 'pick a rating first' };
  try {
    const stored = await client.submitRating(state.subject.subject_id, {
      rating: state.draft.rating,
      affected_structures: state.draft.affected,
      rater: state.draft.rater,
      note: state.draft.note,
    });
    return { ok: true, state: applyRatingAck(state, stored), stored };
  } catch (err) {
    return { ok: false, state, error: err instanceof Error ? err.message : String(err) };
  }
}

/** Next subject still unrated, scanning forward from current and wrapping. */
export function nextUnrated(
  subjects: readonly SubjectSummary[],
  currentId: string | null,
): SubjectSummary | null {
  if (subjects.length === 0) return null;
  const startAfter = currentId === null ? -1 : subjects.findIndex((s) => s.subject_id === currentId);
  for (let i = 1; i <= subjects.length; i++) {
    const candidate = subjects[(startAfter + i + subjects.length) % subjects.length];
    if (candidate.qc_status === 'unrated' && candidate.subject_id !== currentId) return candidate;
  }
  return null;
}
