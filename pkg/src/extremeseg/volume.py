"""Voxel-grid containers, file I/O, resampling, cropping, and the Dice metric.

A volume on disk is a pair of files: ``<name>.json`` (sidecar header) and
``<name>.raw`` (little-endian payload, x-fastest). Intensities are always
float32 in memory; masks are uint8 with values 0/1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

Triple = tuple[int, int, int]


class VolumeError(Exception):
    """Raised for malformed volume files or inconsistent grid operations."""


@dataclass(frozen=True)
class BoundingBox:
    """Inclusive voxel-index box: lo <= hi componentwise."""

    lo: Triple
    hi: Triple

    def __post_init__(self):
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise VolumeError(f"bounding box lo {self.lo} exceeds hi {self.hi}")

    @property
    def dims(self) -> Triple:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))


@dataclass(frozen=True)
class Volume:
    """3D scalar grid with physical spacing.

    ``data`` has shape (nx, ny, nz) so that ``data[x, y, z]`` matches
    voxel coordinates; the on-disk layout is x-fastest.
    """

    data: np.ndarray
    spacing: tuple[float, float, float]

    def __post_init__(self):
        if self.data.ndim != 3:
            raise VolumeError(f"expected 3D data, got shape {self.data.shape}")
        if any(s <= 0 for s in self.spacing):
            raise VolumeError(f"spacing must be positive, got {self.spacing}")
        if not np.all(np.isfinite(self.data)):
            raise VolumeError("volume contains non-finite values")
        object.__setattr__(self, "data", np.ascontiguousarray(self.data, dtype=np.float32))
        self.data.setflags(write=False)

    @property
    def dims(self) -> Triple:
        return self.data.shape


@dataclass(frozen=True)
class Mask:
    """Binary voxel grid; same geometry conventions as Volume."""

    data: np.ndarray
    spacing: tuple[float, float, float]

    def __post_init__(self):
        if self.data.ndim != 3:
            raise VolumeError(f"expected 3D data, got shape {self.data.shape}")
        arr = np.ascontiguousarray(self.data)
        if arr.dtype != np.uint8:
            if not np.isin(arr, (0, 1)).all():
                raise VolumeError("mask values must be 0 or 1")
            arr = arr.astype(np.uint8)
        elif arr.max(initial=0) > 1:
            raise VolumeError("mask values must be 0 or 1")
        object.__setattr__(self, "data", arr)
        self.data.setflags(write=False)

    @property
    def dims(self) -> Triple:
        return self.data.shape


@dataclass(frozen=True)
class ProbabilityMap:
    """Per-voxel foreground probability in [0, 1]."""

    data: np.ndarray
    spacing: tuple[float, float, float]

    def __post_init__(self):
        if self.data.ndim != 3:
            raise VolumeError(f"expected 3D data, got shape {self.data.shape}")
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise VolumeError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "data", arr)
        self.data.setflags(write=False)

    @property
    def dims(self) -> Triple:
        return self.data.shape


_DTYPES = {"f32": np.dtype("<f4"), "u8": np.dtype("u1")}


def _paths(path: str | Path) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix == ".json":
        p = p.with_suffix("")
    return p.with_suffix(".json"), p.with_suffix(".raw")


def save_volume(v: Volume | Mask | ProbabilityMap, path: str | Path) -> None:
    """Write sidecar JSON + raw payload; masks as u8, everything else f32."""
    header_path, raw_path = _paths(path)
    dtype = "u8" if isinstance(v, Mask) else "f32"
    header = {
        "dims": list(v.dims),
        "spacing_mm": list(v.spacing),
        "dtype": dtype,
        "order": "x-fastest",
        "byte_order": "little",
    }
    header_path.write_text(json.dumps(header))
    payload = np.asarray(v.data, dtype=_DTYPES[dtype]).ravel(order="F")
    raw_path.write_bytes(payload.tobytes())


def load_volume(path: str | Path) -> Volume | Mask:
    """Read a sidecar volume; returns a Mask for u8 payloads, Volume for f32."""
    header_path, raw_path = _paths(path)
    if not header_path.exists():
        raise VolumeError(f"missing header file: {header_path}")
    if not raw_path.exists():
        raise VolumeError(f"missing raw payload: {raw_path}")
    header = json.loads(header_path.read_text())
    dims = tuple(int(d) for d in header["dims"])
    spacing = tuple(float(s) for s in header["spacing_mm"])
    dtype = header.get("dtype", "f32")
    if dtype not in _DTYPES:
        raise VolumeError(f"unsupported dtype {dtype!r}")
    if header.get("order", "x-fastest") != "x-fastest":
        raise VolumeError(f"unsupported order {header.get('order')!r}")
    if header.get("byte_order", "little") != "little":
        raise VolumeError(f"unsupported byte order {header.get('byte_order')!r}")
    raw = np.frombuffer(raw_path.read_bytes(), dtype=_DTYPES[dtype])
    expected = int(np.prod(dims))
    if raw.size != expected:
        raise VolumeError(
            f"size mismatch: header dims {dims} imply {expected} elements, payload has {raw.size}"
        )
    data = raw.reshape(dims, order="F")
    if dtype == "u8":
        return Mask(data=data, spacing=spacing)
    return Volume(data=data, spacing=spacing)


def load_probability_map(path: str | Path) -> ProbabilityMap:
    v = load_volume(path)
    if not isinstance(v, Volume):
        raise VolumeError("expected an f32 payload for a probability map")
    return ProbabilityMap(data=v.data, spacing=v.spacing)


def resample_isotropic(v: Volume, target: float) -> Volume:
    """Resample to isotropic ``target`` mm spacing by trilinear interpolation.

    Sample coordinates are clamped to the grid (no extrapolation); output
    dims are round(dim * spacing / target), at least 1 per axis.
    """
    if target <= 0:
        raise VolumeError(f"target spacing must be positive, got {target}")
    out_dims = tuple(
        max(1, int(round(d * s / target))) for d, s in zip(v.dims, v.spacing)
    )
    # Source coordinates (continuous voxel index) of each output voxel.
    coords = [
        np.clip(np.arange(n) * target / s, 0.0, d - 1)
        for n, s, d in zip(out_dims, v.spacing, v.dims)
    ]
    out = _trilinear(v.data, *np.meshgrid(*coords, indexing="ij"))
    return Volume(data=out, spacing=(target, target, target))


def _trilinear(data: np.ndarray, cx: np.ndarray, cy: np.ndarray, cz: np.ndarray) -> np.ndarray:
    nx, ny, nz = data.shape
    x0 = np.clip(np.floor(cx).astype(np.intp), 0, nx - 1)
    y0 = np.clip(np.floor(cy).astype(np.intp), 0, ny - 1)
    z0 = np.clip(np.floor(cz).astype(np.intp), 0, nz - 1)
    x1 = np.minimum(x0 + 1, nx - 1)
    y1 = np.minimum(y0 + 1, ny - 1)
    z1 = np.minimum(z0 + 1, nz - 1)
    fx = (cx - x0).astype(np.float64)
    fy = (cy - y0).astype(np.float64)
    fz = (cz - z0).astype(np.float64)
    d = data.astype(np.float64)
    out = (
        d[x0, y0, z0] * (1 - fx) * (1 - fy) * (1 - fz)
        + d[x1, y0, z0] * fx * (1 - fy) * (1 - fz)
        + d[x0, y1, z0] * (1 - fx) * fy * (1 - fz)
        + d[x0, y0, z1] * (1 - fx) * (1 - fy) * fz
        + d[x1, y1, z0] * fx * fy * (1 - fz)
        + d[x1, y0, z1] * fx * (1 - fy) * fz
        + d[x0, y1, z1] * (1 - fx) * fy * fz
        + d[x1, y1, z1] * fx * fy * fz
    )
    return out.astype(np.float32)


def crop(v, b: BoundingBox):
    """Extract the inclusive box ``b``; spacing preserved."""
    for axis, (lo, hi, n) in enumerate(zip(b.lo, b.hi, v.dims)):
        if lo < 0 or hi >= n:
            raise VolumeError(f"bounding box out of range on axis {axis}: [{lo},{hi}] vs dim {n}")
    sl = tuple(slice(l, h + 1) for l, h in zip(b.lo, b.hi))
    return type(v)(data=v.data[sl].copy(), spacing=v.spacing)


def dice_score(a: Mask, b: Mask) -> float:
    """2|a∩b| / (|a|+|b|); two empty masks score 1.0."""
    if a.dims != b.dims:
        raise VolumeError(f"dim mismatch: {a.dims} vs {b.dims}")
    inter = int(np.count_nonzero(a.data & b.data))
    total = int(np.count_nonzero(a.data)) + int(np.count_nonzero(b.data))
    if total == 0:
        return 1.0
    return 2.0 * inter / total
