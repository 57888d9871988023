/**
 * Segmentation overlays arrive as per-z-slice run-length encodings: each
 * entry covers one z index and lists [start, length] runs of foreground
 * over the x-fastest flattened (nx * ny) slice. Decoding reconstructs a
 * flat x-fastest binary volume from which any axis slice can be cut.
 */

import { Axis, Vec3, pixelToVoxel } from "./coords.js";

export interface OverlaySlice {
  index: number;
  runs: [number, number][];
}

/** Decode the RLE overlay into a flat x-fastest uint8 volume. */
export function decodeOverlay(dims: Vec3, slices: OverlaySlice[]): Uint8Array {
  const [nx, ny, nz] = dims;
  const mask = new Uint8Array(nx * ny * nz);
  for (const s of slices) {
    if (s.index < 0 || s.index >= nz) {
      throw new Error(`overlay slice index ${s.index} out of range`);
    }
    const base = nx * ny * s.index;
    for (const [start, length] of s.runs) {
      if (start < 0 || start + length > nx * ny) {
        throw new Error(`overlay run [${start}, ${length}] exceeds slice`);
      }
      mask.fill(1, base + start, base + start + length);
    }
  }
  return mask;
}

export function voxelValue(mask: Uint8Array, dims: Vec3, voxel: Vec3): number {
  const [nx, ny] = dims;
  return mask[voxel[0] + nx * (voxel[1] + ny * voxel[2])];
}

/** Cut an overlay slice matching the server's pixel layout (u fastest). */
export function maskSlice(
  mask: Uint8Array,
  dims: Vec3,
  axis: Axis,
  index: number,
): Uint8Array {
  const [nx, ny] = dims;
  const rest = [0, 1, 2].filter((i) => i !== ["x", "y", "z"].indexOf(axis));
  const width = dims[rest[0] as 0 | 1 | 2];
  const height = dims[rest[1] as 0 | 1 | 2];
  const out = new Uint8Array(width * height);
  for (let v = 0; v < height; v++) {
    for (let u = 0; u < width; u++) {
      const vox = pixelToVoxel(axis, index, u, v);
      out[u + width * v] = mask[vox[0] + nx * (vox[1] + ny * vox[2])];
    }
  }
  return out;
}

export function foregroundRunCount(slices: OverlaySlice[]): number {
  return slices.reduce((n, s) => n + s.runs.length, 0);
}
