"""Binary morphology with discrete ball structuring elements.

Dilation and erosion are implemented through the exact Euclidean distance
transform rather than offset sweeps: a voxel is dilated-on iff its squared
distance to the mask is <= r^2. On integer grids squared distances are
integers, so the comparison is exact, and large radii (the r=30 background
seeding step) stay cheap. Outside the grid counts as background.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .volume import Mask


@dataclass(frozen=True)
class BallElement:
    """All integer offsets (dx,dy,dz) with dx^2+dy^2+dz^2 <= radius^2."""

    radius_vox: int

    def __post_init__(self):
        if self.radius_vox < 0:
            raise ValueError(f"radius must be non-negative, got {self.radius_vox}")

    @property
    def offsets(self) -> np.ndarray:
        r = self.radius_vox
        rng = np.arange(-r, r + 1)
        dx, dy, dz = np.meshgrid(rng, rng, rng, indexing="ij")
        keep = dx**2 + dy**2 + dz**2 <= r * r
        return np.stack([dx[keep], dy[keep], dz[keep]], axis=1)


def ball(radius_vox: int) -> BallElement:
    return BallElement(radius_vox=radius_vox)


def _dilate_bool(m: np.ndarray, radius: int) -> np.ndarray:
    if radius == 0 or not m.any():
        return m.copy()
    d2 = ndimage.distance_transform_edt(~m) ** 2
    # squared EDT values are integers; +0.5 absorbs float rounding
    return d2 <= radius * radius + 0.5


def dilate(m: Mask, e: BallElement) -> Mask:
    """Voxel is on iff any in-bounds voxel of m within the ball is on."""
    return Mask(data=_dilate_bool(m.data.astype(bool), e.radius_vox).astype(np.uint8),
                spacing=m.spacing)


def erode(m: Mask, e: BallElement) -> Mask:
    """Voxel is on iff every ball offset lands on an on-voxel; out-of-grid
    neighbors count as background, so voxels near the border erode away."""
    fg = m.data.astype(bool)
    r = e.radius_vox
    if r == 0 or not fg.any():
        return Mask(data=fg.astype(np.uint8), spacing=m.spacing)
    # pad with one background layer so the border behaves as background
    padded = np.pad(fg, 1, constant_values=False)
    d2 = ndimage.distance_transform_edt(padded) ** 2
    inner = d2[1:-1, 1:-1, 1:-1]
    return Mask(data=(inner > r * r + 0.5).astype(np.uint8), spacing=m.spacing)
