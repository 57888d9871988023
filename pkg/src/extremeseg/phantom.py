"""Synthetic ellipsoid phantoms: paired intensity volume + ground-truth mask.

Used by the acceptance suite and the `phantom` CLI command in place of
clinical data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .volume import Mask, Volume


@dataclass(frozen=True)
class PhantomSpec:
    radius_min: float = 12.0
    radius_max: float = 24.0
    ratio_min: float = 0.7
    ratio_max: float = 1.3
    noise_sigma: float = 0.05
    margin_vox: int = 26
    contrast: float = 1.0


def make_phantom(seed: int, spec: PhantomSpec = PhantomSpec()) -> tuple[Volume, Mask]:
    """One noisy bright ellipsoid on a dark background, deterministic per seed."""
    rng = np.random.default_rng(seed)
    radius = rng.uniform(spec.radius_min, spec.radius_max)
    ratios = rng.uniform(spec.ratio_min, spec.ratio_max, size=3)
    semi = radius * ratios
    dims = tuple(int(np.ceil(2 * s)) + 2 * spec.margin_vox + 1 for s in semi)
    center = tuple((d - 1) / 2.0 for d in dims)
    grids = np.meshgrid(*(np.arange(d, dtype=np.float64) for d in dims), indexing="ij")
    r2 = sum(((g - c) / s) ** 2 for g, c, s in zip(grids, center, semi))
    inside = r2 <= 1.0
    data = inside.astype(np.float64) * spec.contrast
    if spec.noise_sigma > 0:
        data += rng.normal(0.0, spec.noise_sigma, size=dims)
    spacing = (1.0, 1.0, 1.0)
    return (
        Volume(data=data.astype(np.float32), spacing=spacing),
        Mask(data=inside.astype(np.uint8), spacing=spacing),
    )


def make_dataset(n_cases: int, seed: int, spec: PhantomSpec = PhantomSpec()):
    """n independent phantoms; case k uses sub-seed derived from (seed, k)."""
    root = np.random.SeedSequence(seed)
    out = []
    for child in root.spawn(n_cases):
        case_seed = int(child.generate_state(1)[0])
        out.append(make_phantom(case_seed, spec))
    return out
