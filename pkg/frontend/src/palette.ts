/**
 * Deterministic label -> color mapping.
 *
 * Hue walks the golden angle (137.508 deg per label id), saturation 0.65,
 * value 0.95. The same formula is documented in the README so screenshots
 * and reports can name colors without a legend. Label 0 is background and
 * never drawn.
 */

export function labelColor(label: number): [number, number, number] {
  const hue = ((label * 137.508) % 360 + 360) % 360;
  return hsvToRgb(hue, 0.65, 0.95);
}

export function hsvToRgb(h: number, s: number, v: number): [number, number, number] {
  const c = v * s;
  const x = c * (1 - Math.abs(((h / 60) % 2) - 1));
  const m = v - c;
  let r = 0;
  let g = 0;
  let b = 0;
  if (h < 60) [r, g, b] = [c, x, 0];
  else if (h < 120) [r, g, b] = [x, c, 0];
  else if (h < 180) [r, g, b] = [0, c, x];
  else if (h < 240) [r, g, b] = [0, x, c];
  else if (h < 300) [r, g, b] = [x, 0, c];
  else [r, g, b] = [c, 0, x];
  return [Math.round((r + m) * 255), Math.round((g + m) * 255), Math.round((b + m) * 255)];
}

/** CSS form, for list badges and the structure checklist. */
export function labelColorCss(label: number): string {
  const [r, g, b] = labelColor(label);
  return `rgb(${r}, ${g}, ${b})`;
}
