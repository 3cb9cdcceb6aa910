/**
 * DOM wiring for the QC review app.
 *
 * Server is the source of truth: subject badges re-render from a fresh
 * GET /api/subjects after every acknowledged rating, never from the draft.
 *
 * Keyboard: g = mark good, b = mark bad, arrows = scroll slices,
 * Enter = submit.
 */

import { ApiClient } from './api.js';
import { composeSlice } from './compose.js';
import { labelColorCss } from './palette.js';
import { nextUnrated, submitRating } from './controller.js';
import {
  initialState,
  selectSubject,
  setAxis,
  setDraftField,
  setDraftRating,
  setIndex,
  setOpacity,
  setOverlay,
  setWindow,
  stepSlice,
  toggleStructure,
  type ViewerState,
} from './state.js';
import type { Axis, OverlaySegment, OverlaySource, Rating, SubjectSummary } from './types.js';

const client = new ApiClient('');

let state: ViewerState = initialState();
let subjects: SubjectSummary[] = [];
// label id -> structure name, fetched once per subject for the checklist
const vocabCache = new Map<string, Record<string, string>>();
// stale-response guard: only the latest refresh may paint
let refreshToken = 0;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const subjectList = $<HTMLUListElement>('subject-list');
const canvas = $<HTMLCanvasElement>('viewer-canvas');
const axisSelect = $<HTMLSelectElement>('axis-select');
const sliceSlider = $<HTMLInputElement>('slice-slider');
const sliceLabel = $<HTMLSpanElement>('slice-label');
const overlaySelect = $<HTMLSelectElement>('overlay-select');
const opacitySlider = $<HTMLInputElement>('opacity-slider');
const opacityLabel = $<HTMLSpanElement>('opacity-label');
const wminInput = $<HTMLInputElement>('wmin-input');
const wmaxInput = $<HTMLInputElement>('wmax-input');
const errorBanner = $<HTMLDivElement>('error-banner');
const statusLine = $<HTMLDivElement>('status-line');
const goodButton = $<HTMLButtonElement>('rating-good');
const badButton = $<HTMLButtonElement>('rating-bad');
const structuresList = $<HTMLDivElement>('structures-list');
const raterInput = $<HTMLInputElement>('rater-input');
const noteInput = $<HTMLInputElement>('note-input');
const submitButton = $<HTMLButtonElement>('submit-btn');

function showError(message: string): void {
  errorBanner.textContent = message;
  errorBanner.hidden = false;
}

function clearError(): void {
  errorBanner.hidden = true;
}

// ---------------------------------------------------------------- subjects

function renderSubjectList(): void {
  subjectList.replaceChildren();
  for (const subject of subjects) {
    const li = document.createElement('li');
    li.className = subject.subject_id === state.subject?.subject_id ? 'active' : '';

    const name = document.createElement('span');
    name.className = 'subject-name';
    name.textContent = subject.subject_id;
    li.appendChild(name);

    if (subject.sentinel_score !== null && subject.sentinel_score !== undefined) {
      const score = document.createElement('span');
      score.className = 'sentinel-score';
      score.title = 'sentinel structure score';
      score.textContent = subject.sentinel_score.toFixed(2);
      li.appendChild(score);
    }

    const badge = document.createElement('span');
    badge.className = `badge badge-${subject.qc_status}`;
    badge.textContent = subject.qc_status;
    li.appendChild(badge);

    li.addEventListener('click', () => {
      void pickSubject(subject);
    });
    subjectList.appendChild(li);
  }
}

async function loadSubjects(): Promise<void> {
  subjects = await client.listSubjects();
  if (state.subject) {
    const current = subjects.find((s) => s.subject_id === state.subject?.subject_id);
    if (current) state = { ...state, subject: current };
  }
  renderSubjectList();
}

async function pickSubject(subject: SubjectSummary): Promise<void> {
  state = selectSubject(state, subject);
  renderSubjectList();
  renderDraft();
  await ensureVocabulary(subject.subject_id);
  renderStructureChecklist();
  await refresh();
}

async function ensureVocabulary(subjectId: string): Promise<void> {
  if (vocabCache.has(subjectId)) return;
  try {
    const sidecar = await client.fetchOverlay(
      subjectId,
      { axis: 1, index: midOf(subjectId, 1) },
      'gt',
    );
    vocabCache.set(subjectId, sidecar.labels);
  } catch {
    vocabCache.set(subjectId, {});
  }
}

function midOf(subjectId: string, axis: Axis): number {
  const subject = subjects.find((s) => s.subject_id === subjectId);
  return subject ? Math.floor(subject.dims[axis] / 2) : 0;
}

// ------------------------------------------------------------------ viewer

async function refresh(): Promise<void> {
  const subject = state.subject;
  if (!subject) return;
  const token = ++refreshToken;
  statusLine.textContent = `loading ${subject.subject_id} ...`;

  const query = { axis: state.axis, index: state.index, window: state.window };
  try {
    const [pngBytes, sidecar] = await Promise.all([
      client.fetchSlicePng(subject.subject_id, query),
      state.overlay === 'none'
        ? Promise.resolve(null)
        : client.fetchOverlay(subject.subject_id, query, state.overlay),
    ]);
    if (token !== refreshToken) return;

    const bitmap = await createImageBitmap(new Blob([pngBytes], { type: 'image/png' }));
    const gray = grayFromBitmap(bitmap);
    const segments: OverlaySegment[] = sidecar ? sidecar.segments : [];
    paint(gray, bitmap.width, bitmap.height, segments);
    clearError();
    statusLine.textContent =
      `${subject.subject_id}  axis ${state.axis}  slice ${state.index + 1}/` +
      `${subject.dims[state.axis]}  overlay ${state.overlay}`;
  } catch (err) {
    if (token !== refreshToken) return;
    // keep the previous image and state; just surface the failure
    showError(err instanceof Error ? err.message : String(err));
    statusLine.textContent = '';
  }
  syncControls();
}

function grayFromBitmap(bitmap: ImageBitmap): Uint8Array {
  const scratch = document.createElement('canvas');
  scratch.width = bitmap.width;
  scratch.height = bitmap.height;
  const ctx = scratch.getContext('2d');
  if (!ctx) throw new Error('2d canvas unavailable');
  ctx.drawImage(bitmap, 0, 0);
  const rgba = ctx.getImageData(0, 0, bitmap.width, bitmap.height).data;
  const gray = new Uint8Array(bitmap.width * bitmap.height);
  for (let i = 0; i < gray.length; i++) gray[i] = rgba[i * 4];
  return gray;
}

function paint(gray: Uint8Array, width: number, height: number, segments: OverlaySegment[]): void {
  const composed = composeSlice(gray, width, height, segments, state.opacity);
  canvas.width = width;
  canvas.height = height;
  const ctx = canvas.getContext('2d');
  if (!ctx) throw new Error('2d canvas unavailable');
  ctx.putImageData(new ImageData(composed, width, height), 0, 0);
}

function syncControls(): void {
  const dims = state.subject?.dims ?? [1, 1, 1];
  axisSelect.value = String(state.axis);
  sliceSlider.max = String(dims[state.axis] - 1);
  sliceSlider.value = String(state.index);
  sliceLabel.textContent = `${state.index + 1}/${dims[state.axis]}`;
  overlaySelect.value = state.overlay;
  opacitySlider.value = String(Math.round(state.opacity * 100));
  opacityLabel.textContent = `${Math.round(state.opacity * 100)}%`;
}

// ------------------------------------------------------------------ rating

function renderStructureChecklist(): void {
  const vocab = state.subject ? (vocabCache.get(state.subject.subject_id) ?? {}) : {};
  structuresList.replaceChildren();
  const ids = Object.keys(vocab).sort((a, b) => Number(a) - Number(b));
  if (ids.length === 0) {
    const empty = document.createElement('div');
    empty.className = 'muted';
    empty.textContent = 'no labeled structures';
    structuresList.appendChild(empty);
    return;
  }
  for (const id of ids) {
    const name = vocab[id];
    const row = document.createElement('label');
    row.className = 'structure-row';

    const box = document.createElement('input');
    box.type = 'checkbox';
    box.checked = state.draft.affected.includes(name);
    box.addEventListener('change', () => {
      state = toggleStructure(state, name);
    });
    row.appendChild(box);

    const swatch = document.createElement('span');
    swatch.className = 'swatch';
    swatch.style.backgroundColor = labelColorCss(Number(id));
    row.appendChild(swatch);

    row.appendChild(document.createTextNode(name));
    structuresList.appendChild(row);
  }
}

function renderDraft(): void {
  goodButton.classList.toggle('selected', state.draft.rating === 'good');
  badButton.classList.toggle('selected', state.draft.rating === 'bad');
  raterInput.value = state.draft.rater;
  noteInput.value = state.draft.note;
  renderStructureChecklist();
}

function chooseRating(rating: Rating): void {
  state = setDraftRating(state, rating);
  renderDraft();
}

async function handleSubmit(): Promise<void> {
  submitButton.disabled = true;
  try {
    const outcome = await submitRating(client, state);
    state = outcome.state;
    if (!outcome.ok) {
      showError(outcome.error);
      renderDraft();
      return;
    }
    clearError();
    await loadSubjects();
    const next = nextUnrated(subjects, outcome.stored.subject_id);
    if (next) {
      await pickSubject(next);
    } else {
      renderDraft();
      await refresh();
    }
  } finally {
    submitButton.disabled = false;
  }
}

// ------------------------------------------------------------------ events

axisSelect.addEventListener('change', () => {
  state = setAxis(state, Number(axisSelect.value) as Axis);
  void refresh();
});

sliceSlider.addEventListener('input', () => {
  state = setIndex(state, Number(sliceSlider.value));
  void refresh();
});

overlaySelect.addEventListener('change', () => {
  state = setOverlay(state, overlaySelect.value as OverlaySource);
  void refresh();
});

opacitySlider.addEventListener('input', () => {
  state = setOpacity(state, Number(opacitySlider.value) / 100);
  void refresh();
});

function applyWindowInputs(): void {
  const min = parseFloat(wminInput.value);
  const max = parseFloat(wmaxInput.value);
  state = setWindow(
    state,
    Number.isFinite(min) && Number.isFinite(max) ? { min, max } : null,
  );
  void refresh();
}
wminInput.addEventListener('change', applyWindowInputs);
wmaxInput.addEventListener('change', applyWindowInputs);

goodButton.addEventListener('click', () => chooseRating('good'));
badButton.addEventListener('click', () => chooseRating('bad'));
raterInput.addEventListener('input', () => {
  state = setDraftField(state, 'rater', raterInput.value);
});
noteInput.addEventListener('input', () => {
  state = setDraftField(state, 'note', noteInput.value);
});
submitButton.addEventListener('click', () => {
  void handleSubmit();
});

document.addEventListener('keydown', (e) => {
  const target = e.target as HTMLElement;
  if (target.tagName === 'INPUT' || target.tagName === 'SELECT' || target.tagName === 'TEXTAREA') {
    return;
  }
  if (e.key === 'g') chooseRating('good');
  else if (e.key === 'b') chooseRating('bad');
  else if (e.key === 'ArrowLeft' || e.key === 'ArrowDown') {
    state = stepSlice(state, -1);
    void refresh();
  } else if (e.key === 'ArrowRight' || e.key === 'ArrowUp') {
    state = stepSlice(state, 1);
    void refresh();
  } else if (e.key === 'Enter') {
    void handleSubmit();
  } else {
    return;
  }
  e.preventDefault();
});

// -------------------------------------------------------------------- boot

async function boot(): Promise<void> {
  try {
    await loadSubjects();
  } catch (err) {
    showError(err instanceof Error ? err.message : String(err));
    return;
  }
  const first = nextUnrated(subjects, null) ?? subjects[0] ?? null;
  if (first) await pickSubject(first);
  else statusLine.textContent = 'no subjects in manifest';
}

void boot();
