/** Payload shapes of the QC review HTTP API (see /api/schema on the server). */

export interface SubjectSummary {
  subject_id: string;
  dims: [number, number, number];
  qc_status: string;
  sentinel_score: number | null;
}

export interface OverlaySegment {
  label: number;
  row: number;
  start: number;
  length: number;
}

export interface OverlaySidecar {
  subject_id: string;
  axis: number;
  index: number;
  overlay: string;
  /** [rows, cols] of the slice plane; cols is the PNG width. */
  shape: [number, number];
  segments: OverlaySegment[];
  /** label id (as string) -> structure name */
  labels: Record<string, string>;
}

export type Rating = 'good' | 'bad' | 'unrated';

export interface StoredRating {
  subject_id: string;
  rating: Rating;
  affected_structures: string[];
  rater: string;
  timestamp: string;
  note: string;
}

export type Axis = 0 | 1 | 2;

export const AXIS_NAMES: Record<Axis, string> = {
  0: 'sagittal',
  1: 'coronal',
  2: 'axial',
};

export type OverlaySource = 'none' | 'gt' | 'prediction';
