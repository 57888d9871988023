"""Gradient-magnitude field, voxel-grid shortest paths, and seed assembly.

The three axis-pair shortest paths over the gradient-magnitude field act as
automatic foreground scribbles; background seeds are everything beyond a
large dilation of those paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra as csgraph_dijkstra

from .morphology import ball, dilate
from .points import ExtremePointSet
from .volume import Mask, Volume

STEP_EPSILON = 1e-3  # added per step: strictly positive moves, shortest-hop ties


class Label(IntEnum):
    UNLABELED = 0
    FOREGROUND = 1
    BACKGROUND = 2


class SeedError(Exception):
    """Raised when a usable seed map cannot be built."""


@dataclass(frozen=True)
class SeedMap:
    """Per-voxel {unlabeled, foreground, background} labels."""

    data: np.ndarray  # uint8 of Label values, shape (nx, ny, nz)
    spacing: tuple[float, float, float]

    @property
    def dims(self):
        return self.data.shape

    @property
    def foreground(self) -> np.ndarray:
        return self.data == Label.FOREGROUND

    @property
    def background(self) -> np.ndarray:
        return self.data == Label.BACKGROUND

    def save_debug(self, path) -> None:
        """Dump as a u8 sidecar volume: 0 unlabeled, 1 fg, 2 bg."""
        import json
        from pathlib import Path

        p = Path(path)
        if p.suffix == ".json":
            p = p.with_suffix("")
        header = {
            "dims": list(self.dims),
            "spacing_mm": list(self.spacing),
            "dtype": "u8",
            "order": "x-fastest",
            "byte_order": "little",
        }
        p.with_suffix(".json").write_text(json.dumps(header))
        p.with_suffix(".raw").write_bytes(self.data.ravel(order="F").tobytes())


@dataclass(frozen=True)
class VoxelPath:
    """Ordered 6-adjacent voxel coordinates from source to target."""

    voxels: tuple[tuple[int, int, int], ...]

    def cost(self, cost_field: Volume) -> float:
        """Sum of (cost + epsilon) over visited voxels, source excluded."""
        total = 0.0
        for v in self.voxels[1:]:
            total += float(cost_field.data[v]) + STEP_EPSILON
        return total


def gradient_magnitude(v: Volume) -> Volume:
    """Central differences in physical units, one-sided at the borders."""
    grads = np.gradient(v.data.astype(np.float64), *v.spacing, edge_order=1)
    mag = np.sqrt(sum(g * g for g in grads))
    return Volume(data=mag.astype(np.float32), spacing=v.spacing)


# neighbor order fixed for deterministic tie-breaking: +x,-x,+y,-y,+z,-z
_NEIGHBOR_STEPS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


def _grid_graph(cost: np.ndarray) -> coo_matrix:
    """Directed 6-connected graph; edge weight = destination cost + epsilon."""
    dims = cost.shape
    n = cost.size
    idx = np.arange(n).reshape(dims)
    w = cost.ravel().astype(np.float64) + STEP_EPSILON
    rows, cols, data = [], [], []
    for axis in range(3):
        src = [slice(None)] * 3
        dst = [slice(None)] * 3
        src[axis] = slice(0, -1)
        dst[axis] = slice(1, None)
        a = idx[tuple(src)].ravel()
        b = idx[tuple(dst)].ravel()
        rows.extend((a, b))
        cols.extend((b, a))
        data.extend((w[b], w[a]))
    return coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()


def shortest_path(cost: Volume, src, dst) -> VoxelPath:
    """Minimum-cost 6-connected path from src to dst.

    Path cost is the sum over visited voxels (source excluded) of
    cost[voxel] + STEP_EPSILON; the epsilon keeps steps strictly positive
    so ties resolve toward fewer hops. Among equal-cost predecessors the
    backtrace prefers neighbors in the order +x,-x,+y,-y,+z,-z.
    """
    dims = cost.dims
    src = tuple(int(c) for c in src)
    dst = tuple(int(c) for c in dst)
    for p in (src, dst):
        if any(c < 0 or c >= d for c, d in zip(p, dims)):
            raise ValueError(f"point {p} outside dims {dims}")
    if np.any(cost.data < 0):
        raise ValueError("cost field must be non-negative")
    if src == dst:
        return VoxelPath(voxels=(src,))

    graph = _grid_graph(cost.data)
    src_flat = int(np.ravel_multi_index(src, dims))
    dist = csgraph_dijkstra(graph, indices=src_flat, directed=True, min_only=False)

    # Backtrace from dst: at each voxel pick the first neighbor (fixed order)
    # whose distance plus the step cost reproduces the current distance.
    w = cost.data.astype(np.float64)
    path = [dst]
    cur = dst
    guard = int(np.prod(dims)) + 1
    for _ in range(guard):
        if cur == src:
            break
        d_cur = dist[np.ravel_multi_index(cur, dims)]
        step = w[cur] + STEP_EPSILON
        found = None
        for dx, dy, dz in _NEIGHBOR_STEPS:
            n = (cur[0] + dx, cur[1] + dy, cur[2] + dz)
            if any(c < 0 or c >= d for c, d in zip(n, dims)):
                continue
            d_n = dist[np.ravel_multi_index(n, dims)]
            if abs(d_n + step - d_cur) <= 1e-9 * max(1.0, abs(d_cur)):
                found = n
                break
        if found is None:
            raise RuntimeError("shortest-path backtrace failed")
        path.append(found)
        cur = found
    path.reverse()
    return VoxelPath(voxels=tuple(path))


def path_mask(paths, dims, spacing) -> Mask:
    data = np.zeros(dims, dtype=np.uint8)
    for p in paths:
        for v in p.voxels:
            data[v] = 1
    return Mask(data=data, spacing=spacing)


@dataclass(frozen=True)
class SeedConfig:
    r_fg: int = 2
    r_bg: int = 30


def normalize_intensity(v: Volume) -> Volume:
    """Affine map of intensities onto [0,1]; constant volumes map to 0."""
    lo = float(v.data.min())
    hi = float(v.data.max())
    if hi <= lo:
        return Volume(data=np.zeros(v.dims, dtype=np.float32), spacing=v.spacing)
    return Volume(data=(v.data - lo) / (hi - lo), spacing=v.spacing)


def scribbles(v: Volume, pts: ExtremePointSet) -> Mask:
    """Union of the three axis-pair shortest paths over the gradient field
    of the intensity-normalized volume (thin, undilated)."""
    pts.validate_inside(v.dims)
    grad = gradient_magnitude(normalize_intensity(v))
    pairs = ((pts.x_min, pts.x_max), (pts.y_min, pts.y_max), (pts.z_min, pts.z_max))
    paths = [shortest_path(grad, a, b) for a, b in pairs]
    return path_mask(paths, v.dims, v.spacing)


def build_seed_map(v: Volume, pts: ExtremePointSet, cfg: SeedConfig = SeedConfig()) -> SeedMap:
    """Foreground = paths dilated by ball(r_fg); background = complement of
    the thin paths dilated by ball(r_bg); rest unlabeled."""
    thin = scribbles(v, pts)
    fg = dilate(thin, ball(cfg.r_fg)).data.astype(bool)
    near = dilate(thin, ball(cfg.r_bg)).data.astype(bool)
    bg = ~near
    if not bg.any():
        raise SeedError(
            "no background voxels remain after dilation by "
            f"r_bg={cfg.r_bg}; enlarge the bounding-box padding"
        )
    labels = np.zeros(v.dims, dtype=np.uint8)
    labels[bg] = Label.BACKGROUND
    labels[fg] = Label.FOREGROUND  # foreground wins any overlap
    return SeedMap(data=labels, spacing=v.spacing)
