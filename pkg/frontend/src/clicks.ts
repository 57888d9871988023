/**
 * Guided extreme-point collection: the user is prompted for one slot at a
 * time in the fixed order x_min, x_max, y_min, y_max, z_min, z_max. Clicks
 * outside the slice are ignored; undo removes the most recent slot. The
 * per-axis ordering rule (min coordinate must not exceed max coordinate on
 * its own axis) is validated client-side before submission.
 */

import { Axis, Vec3, inBounds, pixelToVoxel } from "./coords.js";

export const SLOT_NAMES = [
  "x_min",
  "x_max",
  "y_min",
  "y_max",
  "z_min",
  "z_max",
] as const;

export type SlotName = (typeof SLOT_NAMES)[number];
export type PointMap = Partial<Record<SlotName, Vec3>>;

/** null when the point set is valid; otherwise the violated rule. */
export function orderingViolation(points: PointMap): string | null {
  for (let axis = 0; axis < 3; axis++) {
    const lo = points[SLOT_NAMES[2 * axis]];
    const hi = points[SLOT_NAMES[2 * axis + 1]];
    if (lo && hi && lo[axis] > hi[axis]) {
      return (
        `${SLOT_NAMES[2 * axis]} coordinate ${lo[axis]} exceeds ` +
        `${SLOT_NAMES[2 * axis + 1]} coordinate ${hi[axis]}`
      );
    }
  }
  return null;
}

export class ClickCollector {
  private readonly dims: Vec3;
  private readonly order: SlotName[] = [];
  private readonly points: PointMap = {};

  constructor(dims: Vec3) {
    this.dims = dims;
  }

  /** The slot the next click will fill, or null once all six are set. */
  nextSlot(): SlotName | null {
    return SLOT_NAMES.find((n) => !(n in this.points)) ?? null;
  }

  /**
   * Assign a click at pixel (u, v) of the given view to the next slot.
   * Returns the voxel, or null if the click was ignored (out of bounds,
   * all slots filled, or it would break the per-axis ordering).
   */
  capture(axis: Axis, index: number, u: number, v: number): Vec3 | null {
    const slot = this.nextSlot();
    if (slot === null) return null;
    const voxel = pixelToVoxel(axis, index, u, v);
    if (!inBounds(this.dims, voxel)) return null;
    const trial: PointMap = { ...this.points, [slot]: voxel };
    if (orderingViolation(trial) !== null) return null;
    this.points[slot] = voxel;
    this.order.push(slot);
    return voxel;
  }

  /** Remove the most recently captured slot; returns it or null. */
  undo(): SlotName | null {
    const slot = this.order.pop();
    if (slot === undefined) return null;
    delete this.points[slot];
    return slot;
  }

  isComplete(): boolean {
    return this.order.length === SLOT_NAMES.length;
  }

  collected(): PointMap {
    return { ...this.points };
  }

  /** Request body for POST /cases/{id}/points; throws if incomplete/invalid. */
  toPayload(): { points: Record<SlotName, Vec3> } {
    if (!this.isComplete()) {
      throw new Error(`only ${this.order.length} of 6 points collected`);
    }
    const violation = orderingViolation(this.points);
    if (violation !== null) {
      throw new Error(violation);
    }
    return { points: { ...(this.points as Record<SlotName, Vec3>) } };
  }
}
