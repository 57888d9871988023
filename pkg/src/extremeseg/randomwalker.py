"""Seeded random-walker segmentation on the 6-connected voxel graph.

Foreground probability at each unseeded voxel solves the combinatorial
Dirichlet problem L_U x_U = -B^T m, where L is the graph Laplacian built
from intensity-difference edge weights and m is the seed indicator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, cg

from .geodesic import SeedMap, normalize_intensity
from .volume import ProbabilityMap, Volume


class SolverError(Exception):
    """Missing seeds or failure of the linear solver."""


@dataclass(frozen=True)
class RwConfig:
    beta: float = 130.0
    cg_tol: float = 1e-6
    cg_max_iter: int = 2000
    weight_epsilon: float = 1e-6

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")
        if self.cg_tol <= 0 or self.weight_epsilon <= 0:
            raise ValueError("cg_tol and weight_epsilon must be positive")


def edge_weight(zi: float, zj: float, beta: float, weight_epsilon: float = 1e-6) -> float:
    """exp(-beta*(zj-zi)^2) + epsilon; expects intensities in [0,1]."""
    d = float(zj) - float(zi)
    return float(np.exp(-beta * d * d)) + weight_epsilon


def _edges(dims) -> tuple[np.ndarray, np.ndarray]:
    """Flat index pairs (i, j) of all 6-connected grid edges, each once."""
    idx = np.arange(int(np.prod(dims))).reshape(dims)
    pairs_i, pairs_j = [], []
    for axis in range(3):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        pairs_i.append(idx[tuple(lo)].ravel())
        pairs_j.append(idx[tuple(hi)].ravel())
    return np.concatenate(pairs_i), np.concatenate(pairs_j)


def build_laplacian(v: Volume, cfg: RwConfig) -> sparse.csr_matrix:
    """Graph Laplacian of the normalized volume: degrees on the diagonal,
    negated edge weights off-diagonal. Rows sum to zero."""
    z = normalize_intensity(v).data.ravel().astype(np.float64)
    i, j = _edges(v.dims)
    w = np.exp(-cfg.beta * (z[j] - z[i]) ** 2) + cfg.weight_epsilon
    n = z.size
    lap = sparse.coo_matrix(
        (np.concatenate([-w, -w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
        shape=(n, n),
    ).tocsr()
    lap.setdiag(-np.asarray(lap.sum(axis=1)).ravel())
    return lap


def solve(v: Volume, seeds: SeedMap, cfg: RwConfig = RwConfig()) -> ProbabilityMap:
    """Foreground probability: 1 at foreground seeds, 0 at background seeds,
    harmonic in between; conjugate gradient with Jacobi preconditioning."""
    if v.dims != seeds.dims:
        raise SolverError(f"dim mismatch: volume {v.dims} vs seeds {seeds.dims}")
    fg = seeds.foreground.ravel()
    bg = seeds.background.ravel()
    if not fg.any():
        raise SolverError("no foreground seeds")
    if not bg.any():
        raise SolverError("no background seeds")

    n = fg.size
    seeded = fg | bg
    x = np.zeros(n, dtype=np.float64)
    x[fg] = 1.0
    free = ~seeded
    if free.any():
        lap = build_laplacian(v, cfg)
        l_uu = lap[free][:, free].tocsr()
        b_us = lap[free][:, seeded].tocsr()
        rhs = -b_us @ x[seeded]
        diag = l_uu.diagonal()
        precond = LinearOperator(l_uu.shape, matvec=lambda r: r / diag)
        sol, info = cg(l_uu, rhs, rtol=cfg.cg_tol, atol=0.0,
                       maxiter=cfg.cg_max_iter, M=precond)
        if info != 0:
            residual = float(np.linalg.norm(l_uu @ sol - rhs) / max(np.linalg.norm(rhs), 1e-300))
            raise SolverError(
                f"conjugate gradient did not converge within {cfg.cg_max_iter} "
                f"iterations (relative residual {residual:.3e})"
            )
        x[free] = sol

    out = np.clip(x, 0.0, 1.0).reshape(v.dims).astype(np.float32)
    return ProbabilityMap(data=out, spacing=v.spacing)


def threshold(p: ProbabilityMap, t: float):
    """Binary mask: voxel on iff probability >= t."""
    from .volume import Mask

    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must lie in [0,1], got {t}")
    return Mask(data=(p.data >= t).astype(np.uint8), spacing=p.spacing)
