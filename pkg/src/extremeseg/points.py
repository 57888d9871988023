"""Extreme points: bounding-box derivation, Gaussian click channel, simulation.

The six points are the user's only supervision: one voxel attaining the
minimal and maximal coordinate along each axis of the object surface.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .volume import BoundingBox, Mask, Volume, VolumeError

Point = tuple[int, int, int]

SLOT_NAMES = ("x_min", "x_max", "y_min", "y_max", "z_min", "z_max")


class PointError(Exception):
    """Raised for invalid extreme-point sets."""


@dataclass(frozen=True)
class ExtremePointSet:
    x_min: Point
    x_max: Point
    y_min: Point
    y_max: Point
    z_min: Point
    z_max: Point

    def __post_init__(self):
        for axis, (lo, hi) in enumerate(
            [(self.x_min, self.x_max), (self.y_min, self.y_max), (self.z_min, self.z_max)]
        ):
            if lo[axis] > hi[axis]:
                raise PointError(
                    f"{SLOT_NAMES[2 * axis]} coordinate {lo[axis]} exceeds "
                    f"{SLOT_NAMES[2 * axis + 1]} coordinate {hi[axis]}"
                )

    @property
    def points(self) -> tuple[Point, ...]:
        return (self.x_min, self.x_max, self.y_min, self.y_max, self.z_min, self.z_max)

    def validate_inside(self, dims) -> None:
        for name, p in zip(SLOT_NAMES, self.points):
            if any(c < 0 or c >= d for c, d in zip(p, dims)):
                raise PointError(f"point {name}={p} outside volume dims {dims}")

    def to_json(self) -> str:
        return json.dumps({"points": {n: list(p) for n, p in zip(SLOT_NAMES, self.points)}})

    @classmethod
    def from_json(cls, text: str) -> "ExtremePointSet":
        try:
            raw = json.loads(text)["points"]
            coords = {n: tuple(int(c) for c in raw[n]) for n in SLOT_NAMES}
        except (KeyError, TypeError, ValueError) as e:
            raise PointError(f"malformed points JSON: {e}") from e
        for n, p in coords.items():
            if len(p) != 3:
                raise PointError(f"point {n} must have 3 coordinates, got {p}")
        return cls(**coords)

    @classmethod
    def load(cls, path: str | Path) -> "ExtremePointSet":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class PointChannelParams:
    sigma_mm: float = 3.0

    def __post_init__(self):
        if self.sigma_mm <= 0:
            raise PointError(f"sigma_mm must be positive, got {self.sigma_mm}")


def bounding_box(pts: ExtremePointSet, v: Volume, padding_mm: float) -> BoundingBox:
    """Componentwise point extent padded by round(padding_mm/spacing), clamped."""
    if padding_mm < 0:
        raise PointError(f"padding_mm must be non-negative, got {padding_mm}")
    pts.validate_inside(v.dims)
    arr = np.array(pts.points, dtype=np.int64)
    pad = [int(round(padding_mm / s)) for s in v.spacing]
    lo = tuple(max(0, int(arr[:, a].min()) - pad[a]) for a in range(3))
    hi = tuple(min(v.dims[a] - 1, int(arr[:, a].max()) + pad[a]) for a in range(3))
    return BoundingBox(lo=lo, hi=hi)


def point_channel(dims, spacing, pts: ExtremePointSet, params: PointChannelParams) -> Volume:
    """Gaussian bump of physical width sigma_mm at each point, combined by max.

    Peak value is exactly 1.0 at each clicked voxel; the max combination
    keeps the channel in [0, 1] even when points coincide.
    """
    pts.validate_inside(dims)
    grids = np.meshgrid(
        *(np.arange(n, dtype=np.float64) * s for n, s in zip(dims, spacing)),
        indexing="ij",
    )
    out = np.zeros(dims, dtype=np.float64)
    inv = 1.0 / (2.0 * params.sigma_mm**2)
    for p in pts.points:
        d2 = sum((g - c * s) ** 2 for g, c, s in zip(grids, p, spacing))
        np.maximum(out, np.exp(-d2 * inv), out=out)
    return Volume(data=out.astype(np.float32), spacing=tuple(spacing))


def _surface_voxels(gt: np.ndarray) -> np.ndarray:
    """Foreground voxels with a background (or out-of-grid) 6-neighbor."""
    fg = gt.astype(bool)
    interior = fg.copy()
    for axis in range(3):
        for shift in (1, -1):
            rolled = np.zeros_like(fg)
            src = [slice(None)] * 3
            dst = [slice(None)] * 3
            if shift == 1:
                src[axis], dst[axis] = slice(0, -1), slice(1, None)
            else:
                src[axis], dst[axis] = slice(1, None), slice(0, -1)
            rolled[tuple(dst)] = fg[tuple(src)]
            interior &= rolled
    return np.argwhere(fg & ~interior)


def simulate_extreme_points(gt: Mask, jitter_mm: float = 0.0, rng_seed: int = 0) -> ExtremePointSet:
    """Machine-generated clicks from a ground-truth mask.

    For each axis the voxel attaining the min (resp. max) coordinate is
    picked, ties broken by lowest linear index in x-fastest order. With
    jitter > 0 the point is replaced by a uniformly drawn surface voxel
    within jitter_mm (physical distance) that preserves per-axis ordering.
    """
    fg = np.argwhere(gt.data.astype(bool))
    if fg.size == 0:
        raise PointError("cannot simulate extreme points from an empty mask")
    nx, ny, _ = gt.dims
    linear = fg[:, 0] + nx * (fg[:, 1] + ny * fg[:, 2])

    def pick(axis: int, sign: int) -> Point:
        coord = fg[:, axis]
        target = coord.min() if sign < 0 else coord.max()
        idx = np.flatnonzero(coord == target)
        best = idx[np.argmin(linear[idx])]
        return tuple(int(c) for c in fg[best])

    exact = [pick(a, s) for a in range(3) for s in (-1, 1)]
    if jitter_mm <= 0:
        return ExtremePointSet(*exact)

    rng = np.random.default_rng(rng_seed)
    surface = _surface_voxels(gt.data)
    sp = np.asarray(gt.spacing, dtype=np.float64)
    chosen: list[Point] = []
    for i, p in enumerate(exact):
        axis, sign = divmod(i, 2)
        d2 = np.sum(((surface - np.asarray(p)) * sp) ** 2, axis=1)
        cand = surface[d2 <= jitter_mm**2]
        if sign == 1 and chosen:  # keep min <= max on this axis
            cand = cand[cand[:, axis] >= chosen[2 * axis][axis]]
        if len(cand) == 0:
            chosen.append(p)
        else:
            chosen.append(tuple(int(c) for c in cand[rng.integers(len(cand))]))
    return ExtremePointSet(*chosen)
