"""Spectral initialization for two-component mixed regression: second-moment
matrix, its top-2 eigen-subspace, then a grid search inside that plane."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import Instance, ParamSet
from .linalg import top_k_eigpairs

__all__ = ["GridSpec", "moment_matrix", "init_subspace", "grid_init", "spectral_init"]


@dataclass(frozen=True)
class GridSpec:
    points_per_axis: int = 41
    radius: Optional[float] = None  # None: 1.5 * sqrt(mean y^2)

    def __post_init__(self):
        if self.points_per_axis < 1:
            raise ValueError("points_per_axis must be >= 1")
        if self.radius is not None and not self.radius > 0:
            raise ValueError("radius must be > 0")


def moment_matrix(inst: Instance) -> np.ndarray:
    """``(1/n) sum_i y_i^2 x_i x_i^T``, symmetrized exactly."""
    Xw = inst.X * (inst.y ** 2)[:, None]
    M = (Xw.T @ inst.X) / inst.n
    return (M + M.T) / 2.0


def init_subspace(M) -> np.ndarray:
    """Orthonormal (d, 2) basis of the top-2 eigenvectors of ``M``."""
    M = np.asarray(M, dtype=float)
    if M.shape[0] < 2:
        raise ValueError("need d >= 2 for a two-dimensional subspace")
    return top_k_eigpairs(M, 2).vectors


def _grid_coefficients(G, R):
    axis = np.linspace(-R, R, G) if G > 1 else np.zeros(1)
    a, c = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([a.ravel(), c.ravel()])


def _best_pair(sq_resid, rows=None, cols=None):
    """Minimize ``sum_i min(r_iu, r_iv)`` over unordered pairs ``u <= v``.

    Ties resolve to the lexicographically smallest ``(u, v)``.
    """
    m = sq_resid.shape[1]
    rows = range(m) if rows is None else rows
    best = (np.inf, -1, -1)
    for u in rows:
        vs = np.arange(u, m) if cols is None else np.asarray([v for v in cols if v >= u])
        if vs.size == 0:
            continue
        vals = np.minimum(sq_resid[:, [u]], sq_resid[:, vs]).sum(axis=0)
        k = int(np.argmin(vals))
        if vals[k] < best[0]:
            best = (float(vals[k]), u, int(vs[k]))
    return best


def grid_init(inst: Instance, basis, grid: GridSpec = GridSpec(), two_stage: bool = False) -> ParamSet:
    """Best pair of grid points ``a b_1 + c b_2`` under the mixture loss.

    The grid has ``G`` equispaced coefficients in ``[-R, R]`` per basis
    direction and all unordered pairs, including repeats, are scored.
    ``two_stage`` first searches every other grid point, then only the
    neighbourhood of the coarse winner; much cheaper but not exhaustive.
    """
    basis = np.asarray(basis, dtype=float)
    G = grid.points_per_axis
    R = grid.radius if grid.radius is not None else 1.5 * float(np.sqrt(np.mean(inst.y ** 2)))
    if R == 0.0:
        R = 1.0
    coef = _grid_coefficients(G, R)
    proj = inst.X @ basis
    sq = (inst.y[:, None] - proj @ coef.T) ** 2

    if two_stage and G >= 5:
        coarse_axis = np.arange(0, G, 2)
        coarse = (coarse_axis[:, None] * G + coarse_axis[None, :]).ravel()
        _, cu, cv = _best_pair(sq[:, coarse])
        near = []
        for idx in (coarse[cu], coarse[cv]):
            ia, ic = divmod(int(idx), G)
            ia_r = range(max(0, ia - 2), min(G, ia + 3))
            ic_r = range(max(0, ic - 2), min(G, ic + 3))
            near.append(sorted(a * G + c for a in ia_r for c in ic_r))
        cand = sorted(set(near[0]) | set(near[1]))
        _, u, v = _best_pair(sq, rows=cand, cols=cand)
    else:
        _, u, v = _best_pair(sq)
    return ParamSet(np.vstack([basis @ coef[u], basis @ coef[v]]))


def spectral_init(inst: Instance, grid: GridSpec = GridSpec(), two_stage: bool = False) -> ParamSet:
    """Moment matrix, top-2 subspace, grid search; for K = 2."""
    return grid_init(inst, init_subspace(moment_matrix(inst)), grid, two_stage)
