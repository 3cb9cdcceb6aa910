/**
 * Pure pixel compositing: grayscale base + run-length label segments.
 *
 * DOM-free on purpose so it runs identically in the browser and in node
 * tests. The server sends overlay segments per plane row; a plane row is a
 * PNG row, so pixel (row, col) lands at (row * width + col) in row-major
 * RGBA.
 */

import type { OverlaySegment } from './types.js';
import { labelColor } from './palette.js';

/**
 * Blend colored segments over a grayscale image.
 *
 * `gray` is one byte per pixel, row-major, length width*height. Returns
 * RGBA bytes for the same geometry. Opacity outside [0,1] is clamped;
 * segments reaching outside the image are clipped, not an error.
 */
export function composeSlice(
  gray: Uint8Array | Uint8ClampedArray,
  width: number,
  height: number,
  segments: readonly OverlaySegment[],
  opacity: number,
  palette: (label: number) => [number, number, number] = labelColor,
): Uint8ClampedArray<ArrayBuffer> {
  if (gray.length !== width * height) {
    throw new Error(`gray buffer has ${gray.length} bytes, expected ${width * height}`);
  }
  const out = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < gray.length; i++) {
    const v = gray[i];
    out[i * 4] = v;
    out[i * 4 + 1] = v;
    out[i * 4 + 2] = v;
    out[i * 4 + 3] = 255;
  }

  const alpha = Number.isFinite(opacity) ? Math.min(1, Math.max(0, opacity)) : 0;
  if (alpha === 0) return out;

  for (const seg of segments) {
    if (seg.row < 0 || seg.row >= height || seg.label === 0) continue;
    const [r, g, b] = palette(seg.label);
    const colStart = Math.max(0, seg.start);
    const colEnd = Math.min(width, seg.start + seg.length);
    for (let col = colStart; col < colEnd; col++) {
      const p = (seg.row * width + col) * 4;
      out[p] = Math.round(r * alpha + out[p] * (1 - alpha));
      out[p + 1] = Math.round(g * alpha + out[p + 1] * (1 - alpha));
      out[p + 2] = Math.round(b * alpha + out[p + 2] * (1 - alpha));
    }
  }
  return out;
}

/** Pixels covered by at least one segment, after clipping to the image. */
export function coveredPixelCount(
  segments: readonly OverlaySegment[],
  width: number,
  height: number,
): number {
  const seen = new Set<number>();
  for (const seg of segments) {
    if (seg.row < 0 || seg.row >= height || seg.label === 0) continue;
    const colEnd = Math.min(width, seg.start + seg.length);
    for (let col = Math.max(0, seg.start); col < colEnd; col++) {
      seen.add(seg.row * width + col);
    }
  }
  return seen.size;
}
