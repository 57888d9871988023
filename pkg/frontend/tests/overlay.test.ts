import { describe, expect, it } from "vitest";

import { Vec3 } from "../src/coords.js";
import {
  OverlaySlice,
  decodeOverlay,
  foregroundRunCount,
  maskSlice,
  voxelValue,
} from "../src/overlay.js";

/** Re-encode a flat x-fastest mask the way the server does. */
function encode(mask: Uint8Array, dims: Vec3): OverlaySlice[] {
  const [nx, ny, nz] = dims;
  const out: OverlaySlice[] = [];
  for (let k = 0; k < nz; k++) {
    const runs: [number, number][] = [];
    let start = -1;
    for (let i = 0; i <= nx * ny; i++) {
      const on = i < nx * ny && mask[nx * ny * k + i] === 1;
      if (on && start < 0) start = i;
      if (!on && start >= 0) {
        runs.push([start, i - start]);
        start = -1;
      }
    }
    if (runs.length) out.push({ index: k, runs });
  }
  return out;
}

describe("decodeOverlay", () => {
  it("reconstructs a known pattern", () => {
    const dims: Vec3 = [4, 3, 2];
    const slices: OverlaySlice[] = [{ index: 0, runs: [[1, 2], [8, 1]] }];
    const mask = decodeOverlay(dims, slices);
    expect(voxelValue(mask, dims, [1, 0, 0])).toBe(1);
    expect(voxelValue(mask, dims, [2, 0, 0])).toBe(1);
    expect(voxelValue(mask, dims, [0, 2, 0])).toBe(1); // flat index 8
    expect(mask.reduce((a, b) => a + b, 0)).toBe(3);
  });

  it("round-trips a random mask through encode/decode", () => {
    const dims: Vec3 = [5, 4, 3];
    const mask = new Uint8Array(60);
    let seed = 12345;
    for (let i = 0; i < mask.length; i++) {
      seed = (seed * 1103515245 + 12345) & 0x7fffffff;
      mask[i] = seed % 3 === 0 ? 1 : 0;
    }
    expect(decodeOverlay(dims, encode(mask, dims))).toEqual(mask);
  });

  it("rejects out-of-range slices and runs", () => {
    const dims: Vec3 = [2, 2, 2];
    expect(() => decodeOverlay(dims, [{ index: 5, runs: [] }])).toThrow();
    expect(() => decodeOverlay(dims, [{ index: 0, runs: [[3, 4]] }])).toThrow();
  });
});

describe("maskSlice", () => {
  it("cuts planes in the server's pixel layout for every axis", () => {
    const dims: Vec3 = [3, 4, 5];
    const mask = new Uint8Array(60);
    // single foreground voxel at (1, 2, 3)
    mask[1 + 3 * (2 + 4 * 3)] = 1;
    const onZ = maskSlice(mask, dims, "z", 3);
    expect(onZ[1 + 3 * 2]).toBe(1); // (u=x, v=y), width nx
    expect(onZ.reduce((a, b) => a + b, 0)).toBe(1);
    const onY = maskSlice(mask, dims, "y", 2);
    expect(onY[1 + 3 * 3]).toBe(1); // (u=x, v=z), width nx
    const onX = maskSlice(mask, dims, "x", 1);
    expect(onX[2 + 4 * 3]).toBe(1); // (u=y, v=z), width ny
    expect(maskSlice(mask, dims, "z", 0).every((b) => b === 0)).toBe(true);
  });
});

describe("foregroundRunCount", () => {
  it("counts runs over all slices", () => {
    expect(foregroundRunCount([])).toBe(0);
    expect(
      foregroundRunCount([
        { index: 0, runs: [[0, 1], [4, 2]] },
        { index: 2, runs: [[1, 1]] },
      ]),
    ).toBe(3);
  });
});
