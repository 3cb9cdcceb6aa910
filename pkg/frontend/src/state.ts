/**
 * Viewer state and its transitions, as pure functions.
 *
 * Two invariants are enforced here and nowhere else:
 *   - the slice index is always inside [0, dims[axis]) for the current
 *     subject, so navigation can never request an out-of-range slice;
 *   - overlay opacity is always inside [0, 1].
 *
 * Rating drafts live in the state and are only cleared by applyRatingAck,
 * i.e. after the server confirmed the write. Every transition returns a new
 * object; callers re-render from the result.
 */

import type { Axis, OverlaySource, Rating, StoredRating, SubjectSummary } from './types.js';

export interface RatingDraft {
  rating: Rating | null;
  affected: string[];
  rater: string;
  note: string;
}

export interface ViewerState {
  subject: SubjectSummary | null;
  axis: Axis;
  index: number;
  overlay: OverlaySource;
  opacity: number;
  window: { min: number; max: number } | null;
  draft: RatingDraft;
}

export function emptyDraft(rater = ''): RatingDraft {
  return { rating: null, affected: [], rater, note: '' };
}

/** Raters inspect the coronal view by default, overlay on at half opacity. */
export function initialState(): ViewerState {
  return {
    subject: null,
    axis: 1,
    index: 0,
    overlay: 'gt',
    opacity: 0.5,
    window: null,
    draft: emptyDraft(),
  };
}

export function clampIndex(index: number, dims: readonly number[], axis: Axis): number {
  const n = dims[axis];
  if (Number.isNaN(index) || n <= 0) return 0;
  return Math.min(n - 1, Math.max(0, Math.trunc(index)));
}

export function midIndex(dims: readonly number[], axis: Axis): number {
  return Math.floor(dims[axis] / 2);
}

export function clampOpacity(value: number, fallback = 0.5): number {
  if (!Number.isFinite(value)) return fallback;
  return Math.min(1, Math.max(0, value));
}

/** Switching subject keeps the axis, jumps to its mid slice, resets the draft. */
export function selectSubject(state: ViewerState, subject: SubjectSummary): ViewerState {
  return {
    ...state,
    subject,
    index: midIndex(subject.dims, state.axis),
    draft: emptyDraft(state.draft.rater),
  };
}

/** Switching axis re-centers; a clamped carry-over index would be arbitrary. */
export function setAxis(state: ViewerState, axis: Axis): ViewerState {
  const index = state.subject ? midIndex(state.subject.dims, axis) : 0;
  return { ...state, axis, index };
}

export function setIndex(state: ViewerState, index: number): ViewerState {
  if (!state.subject) return state;
  return { ...state, index: clampIndex(index, state.subject.dims, state.axis) };
}

export function stepSlice(state: ViewerState, delta: number): ViewerState {
  return setIndex(state, state.index + delta);
}

export function setOverlay(state: ViewerState, overlay: OverlaySource): ViewerState {
  return { ...state, overlay };
}

export function setOpacity(state: ViewerState, value: number): ViewerState {
  return { ...state, opacity: clampOpacity(value, state.opacity) };
}

export function setWindow(state: ViewerState, window: { min: number; max: number } | null): ViewerState {
  return { ...state, window };
}

export function setDraftRating(state: ViewerState, rating: Rating): ViewerState {
  return { ...state, draft: { ...state.draft, rating } };
}

export function setDraftField(state: ViewerState, field: 'rater' | 'note', value: string): ViewerState {
  return { ...state, draft: { ...state.draft, [field]: value } };
}

export function toggleStructure(state: ViewerState, name: string): ViewerState {
  const affected = state.draft.affected.includes(name)
    ? state.draft.affected.filter((s) => s !== name)
    : [...state.draft.affected, name];
  return { ...state, draft: { ...state.draft, affected } };
}

/**
 * Server acknowledged the rating: clear the draft (keeping the rater name)
 * and reflect the stored status on the in-memory subject entry.
 */
export function applyRatingAck(state: ViewerState, stored: StoredRating): ViewerState {
  const subject =
    state.subject && state.subject.subject_id === stored.subject_id
      ? { ...state.subject, qc_status: stored.rating }
      : state.subject;
  return { ...state, subject, draft: emptyDraft(state.draft.rater) };
}
