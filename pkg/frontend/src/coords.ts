/**
 * Pixel <-> voxel coordinate mapping.
 *
 * The server extracts a slice along one axis and keeps the two remaining
 * axes in (lower, higher) axis order, flattening with the lower axis
 * fastest. A pixel is (u, v) where u runs along the lower remaining axis
 * and v along the higher one; the functions below are exact inverses of
 * that extraction for all three axes.
 */

export type Axis = "x" | "y" | "z";
export type Vec3 = [number, number, number];

export const AXES: readonly Axis[] = ["x", "y", "z"];

const AXIS_INDEX: Record<Axis, number> = { x: 0, y: 1, z: 2 };

export function axisIndex(axis: Axis): number {
  return AXIS_INDEX[axis];
}

/** The two in-plane axes for a view, in (lower, higher) order. */
export function planeAxes(axis: Axis): [number, number] {
  const a = AXIS_INDEX[axis];
  const rest = [0, 1, 2].filter((i) => i !== a);
  return [rest[0], rest[1]];
}

/** Width (u extent) and height (v extent) of the slice for a view. */
export function planeShape(dims: Vec3, axis: Axis): [number, number] {
  const [ua, va] = planeAxes(axis);
  return [dims[ua], dims[va]];
}

/** Voxel coordinate of pixel (u, v) on slice `index` of the given view. */
export function pixelToVoxel(axis: Axis, index: number, u: number, v: number): Vec3 {
  const out: Vec3 = [0, 0, 0];
  const [ua, va] = planeAxes(axis);
  out[AXIS_INDEX[axis]] = index;
  out[ua] = u;
  out[va] = v;
  return out;
}

/** Slice index and pixel of a voxel in the given view; inverse of pixelToVoxel. */
export function voxelToPixel(
  axis: Axis,
  voxel: Vec3,
): { index: number; u: number; v: number } {
  const [ua, va] = planeAxes(axis);
  return { index: voxel[AXIS_INDEX[axis]], u: voxel[ua], v: voxel[va] };
}

/** Offset of pixel (u, v) into the flattened slice buffer (u fastest). */
export function pixelOffset(dims: Vec3, axis: Axis, u: number, v: number): number {
  const [width] = planeShape(dims, axis);
  return u + width * v;
}

export function inBounds(dims: Vec3, voxel: Vec3): boolean {
  return voxel.every((c, i) => Number.isInteger(c) && c >= 0 && c < dims[i]);
}
