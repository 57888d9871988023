/**
 * Rendering helpers. The pixel composition is pure (testable without a
 * DOM): grayscale base slice, translucent overlay, and click markers are
 * merged into an RGBA buffer which main.ts blits onto a canvas.
 */

import { Axis, Vec3, planeShape, voxelToPixel } from "./coords.js";

export interface Marker {
  voxel: Vec3;
  label: string;
}

const OVERLAY_RGB: [number, number, number] = [255, 80, 40];
const OVERLAY_ALPHA = 0.45;
const MARKER_RGB: [number, number, number] = [60, 220, 255];

/**
 * Compose one view into an RGBA buffer (u fastest, length 4*w*h).
 * `overlay` is the binary overlay slice in the same layout as `slice`,
 * or null when hidden; markers on other slices are skipped.
 */
export function composeRgba(
  slice: Uint8Array,
  dims: Vec3,
  axis: Axis,
  index: number,
  overlay: Uint8Array | null,
  markers: Marker[],
): Uint8ClampedArray<ArrayBuffer> {
  const [width, height] = planeShape(dims, axis);
  if (slice.length !== width * height) {
    throw new Error(`slice length ${slice.length} != ${width}x${height}`);
  }
  const rgba = new Uint8ClampedArray(
    new ArrayBuffer(4 * width * height),
  );
  for (let i = 0; i < slice.length; i++) {
    let r = slice[i];
    let g = slice[i];
    let b = slice[i];
    if (overlay && overlay[i]) {
      r = r * (1 - OVERLAY_ALPHA) + OVERLAY_RGB[0] * OVERLAY_ALPHA;
      g = g * (1 - OVERLAY_ALPHA) + OVERLAY_RGB[1] * OVERLAY_ALPHA;
      b = b * (1 - OVERLAY_ALPHA) + OVERLAY_RGB[2] * OVERLAY_ALPHA;
    }
    rgba[4 * i] = r;
    rgba[4 * i + 1] = g;
    rgba[4 * i + 2] = b;
    rgba[4 * i + 3] = 255;
  }
  for (const m of markers) {
    const p = voxelToPixel(axis, m.voxel);
    if (p.index !== index) continue;
    const i = p.u + width * p.v;
    rgba[4 * i] = MARKER_RGB[0];
    rgba[4 * i + 1] = MARKER_RGB[1];
    rgba[4 * i + 2] = MARKER_RGB[2];
  }
  return rgba;
}

/** Text sparkline of the per-round Dice-vs-previous values. */
export function diceSparkline(values: (number | null)[]): string {
  const glyphs = "▁▂▃▄▅▆▇█";
  return values
    .map((d) => (d === null ? "·" : glyphs[Math.min(7, Math.floor(d * 8))]))
    .join("");
}
