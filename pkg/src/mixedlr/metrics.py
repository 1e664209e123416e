"""Error metric, mixture objective, mismatch set and convergence-rate fits."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import DimensionMismatch, InsufficientPoints, MissingLabels, UnsupportedK

__all__ = [
    "RateFit",
    "MismatchReport",
    "thetas_of",
    "dist",
    "residuals",
    "loss",
    "mismatch_set",
    "fit_convergence_exponent",
    "optimization_error_seq",
    "DEFAULT_WINDOW_LO",
]

DEFAULT_WINDOW_LO = 1e-9


def thetas_of(obj) -> np.ndarray:
    """(K, d) array from a ParamSet, GroundTruth or array-like."""
    arr = np.asarray(getattr(obj, "thetas", obj), dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


# matchings are enumerated up to this K; larger K uses an exact bottleneck search
ENUMERATE_MAX_K = 4


def dist(est, truth) -> float:
    """Worst per-component error, minimized over component matchings.

    ``min_pi max_j ||est[pi(j)] - truth[j]||``; coincides with the plain
    max-norm error whenever the identity matching is optimal.
    """
    a, b = thetas_of(est), thetas_of(truth)
    if a.shape != b.shape:
        raise DimensionMismatch(f"parameter shapes differ: {a.shape} vs {b.shape}")
    K = a.shape[0]
    # pairwise[i, j] = ||a_i - b_j||
    pairwise = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    if K <= ENUMERATE_MAX_K:
        cols = np.arange(K)
        return float(min(pairwise[list(p), cols].max() for p in permutations(range(K))))
    return _bottleneck_assignment(pairwise)


def _bottleneck_assignment(cost) -> float:
    # threshold search over sorted costs; feasible iff a perfect matching exists
    from scipy.optimize import linear_sum_assignment

    values = np.unique(cost)
    lo, hi = 0, len(values) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        mask = (cost > values[mid]).astype(float)
        r, c = linear_sum_assignment(mask)
        if mask[r, c].sum() == 0:
            hi = mid
        else:
            lo = mid + 1
    return float(values[lo])


def residuals(inst, params) -> np.ndarray:
    """(n, K) matrix of ``y_i - <x_i, theta_j>``."""
    th = thetas_of(params)
    if th.shape[1] != inst.d:
        raise DimensionMismatch(f"params have d={th.shape[1]}, instance has d={inst.d}")
    return inst.y[:, None] - inst.X @ th.T


def loss(inst, params) -> float:
    """Mixture least-squares objective ``sum_i min_j (y_i - <x_i, theta_j>)^2``."""
    r = residuals(inst, params)
    return float(np.sum(np.min(r * r, axis=1)))


@dataclass(frozen=True)
class MismatchReport:
    indices: frozenset
    size: int
    dist_at_eval: float


def mismatch_set(inst, params) -> MismatchReport:
    """Samples truly from component 2 that component 1 fits strictly better.

    ``S = J_1 & J*_2`` with ``J_1 = {i : r_i1^2 < r_i2^2}`` (ties go to
    component 2) and ``J*_2 = {i : z_i = 1}`` in 0-based labels.
    """
    if inst.z is None:
        raise MissingLabels("mismatch set needs the latent labels")
    th = thetas_of(params)
    if th.shape[0] != 2:
        raise UnsupportedK(f"mismatch set is defined for K=2, got K={th.shape[0]}")
    r2 = residuals(inst, th) ** 2
    idx = np.flatnonzero((r2[:, 0] < r2[:, 1]) & (inst.z == 1))
    d = dist(th, inst.truth) if inst.truth is not None else float("nan")
    return MismatchReport(indices=frozenset(int(i) for i in idx), size=len(idx), dist_at_eval=d)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    points_used: int
    window: tuple

    def __str__(self):
        return (f"slope={self.slope:.4f} intercept={self.intercept:.4f} "
                f"R2={self.r_squared:.4f} points={self.points_used}")


def loglog_pairs(dist_seq, window=(DEFAULT_WINDOW_LO, None)):
    """Consecutive ``(log e_t, log e_{t+1})`` pairs with both errors admitted.

    A value is admitted when ``lo < e <= hi``; ``hi=None`` means the first
    entry of the sequence, so the initial error itself is included.
    """
    seq = np.asarray(dist_seq, dtype=float)
    if seq.ndim != 1 or seq.size < 2:
        return np.empty(0), np.empty(0), window
    lo, hi = window
    if lo is None:
        lo = DEFAULT_WINDOW_LO
    if hi is None:
        hi = float(seq[0])
    ok = (seq > lo) & (seq <= hi) & (seq > 0) & np.isfinite(seq)
    keep = ok[:-1] & ok[1:]
    with np.errstate(divide="ignore"):
        x = np.log(seq[:-1][keep])
        y = np.log(seq[1:][keep])
    return x, y, (float(lo), float(hi))


def fit_convergence_exponent(dist_seq, window=(DEFAULT_WINDOW_LO, None)) -> RateFit:
    """Least-squares line through the log-log consecutive-error pairs.

    The slope is the empirical convergence exponent: 1 for linear
    convergence, 2 for quadratic.
    """
    x, y, window = loglog_pairs(dist_seq, window)
    if x.size < 2:
        raise InsufficientPoints(f"need >= 2 admissible pairs, got {x.size}")
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise InsufficientPoints("admissible pairs share one abscissa")
    slope = float(dx @ dy) / sxx
    intercept = float(ym - slope * xm)
    ss_res = float(np.sum((y - (intercept + slope * x)) ** 2))
    ss_tot = float(dy @ dy)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(slope, intercept, float(np.clip(r2, 0.0, 1.0)), int(x.size), window)


def optimization_error_seq(trace, reference=None) -> list:
    """Matched distance of every iterate to ``reference`` (default: last iterate)."""
    ref = trace.iterates[-1] if reference is None else reference
    return [dist(it, ref) for it in trace.iterates]
