import { describe, expect, it } from "vitest";

import { Vec3 } from "../src/coords.js";
import { composeRgba, diceSparkline } from "../src/viewer.js";

const dims: Vec3 = [3, 2, 2];

describe("composeRgba", () => {
  it("renders grayscale without overlay", () => {
    const slice = new Uint8Array([0, 50, 100, 150, 200, 250]);
    const rgba = composeRgba(slice, dims, "z", 0, null, []);
    expect(rgba).toHaveLength(24);
    for (let i = 0; i < slice.length; i++) {
      expect(rgba[4 * i]).toBe(slice[i]);
      expect(rgba[4 * i + 1]).toBe(slice[i]);
      expect(rgba[4 * i + 2]).toBe(slice[i]);
      expect(rgba[4 * i + 3]).toBe(255);
    }
  });

  it("tints overlayed pixels and leaves the rest untouched", () => {
    const slice = new Uint8Array(6).fill(100);
    const overlay = new Uint8Array(6);
    overlay[2] = 1;
    const rgba = composeRgba(slice, dims, "z", 0, overlay, []);
    expect(rgba[4 * 2]).toBeGreaterThan(100); // red-shifted
    expect(rgba[4 * 1]).toBe(100);
  });

  it("draws markers only on their own slice", () => {
    const slice = new Uint8Array(6);
    const marker = { voxel: [1, 0, 0] as Vec3, label: "x_min" };
    const onSlice = composeRgba(slice, dims, "z", 0, null, [marker]);
    expect(onSlice[4 * 1 + 2]).toBe(255); // marker blue channel
    const offSlice = composeRgba(slice, dims, "z", 1, null, [marker]);
    expect(offSlice[4 * 1 + 2]).toBe(0);
  });

  it("rejects a slice whose size does not match the view", () => {
    expect(() =>
      composeRgba(new Uint8Array(5), dims, "z", 0, null, []),
    ).toThrow(/slice length/);
  });
});

describe("diceSparkline", () => {
  it("maps round values to glyphs and nulls to dots", () => {
    const line = diceSparkline([null, 0.5, 1.0]);
    expect(line).toHaveLength(3);
    expect(line[0]).toBe("·");
    expect(line[2]).toBe("█");
  });
});
