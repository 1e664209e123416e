"""Alternating minimization for mixed linear regression.

Each round assigns every sample to the regressor with the smallest absolute
residual, then refits each regressor by ordinary least squares on its
assigned rows.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .data import Instance, ParamSet
from .errors import DimensionMismatch, TooManyGroups
from .linalg import seed_sequence, solve_least_squares
from .metrics import dist, loss, residuals, thetas_of

__all__ = ["AmConfig", "Trace", "split_samples", "assign_labels", "refit", "run_am"]


@dataclass(frozen=True)
class AmConfig:
    max_rounds: int = 50
    sample_split: bool = False
    tol: float = 1e-12
    track_truth: bool = True
    ls_method: str = "auto"
    # stop once dist-to-truth <= target (needs truth on the instance)
    target_precision: Optional[float] = None
    split_seed: int = 0

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")
        if self.ls_method not in ("auto", "qr"):
            raise ValueError("ls_method must be 'auto' or 'qr'")


@dataclass
class Trace:
    """Per-iteration record of a solver run; ``iterates[0]`` is the init."""

    iterates: list = field(default_factory=list)
    dist_to_truth: Optional[list] = None
    loss_seq: list = field(default_factory=list)
    labels_final: Optional[np.ndarray] = None
    wall_clock_per_iter: list = field(default_factory=list)
    converged_at: Optional[int] = None
    reached_target_at: Optional[int] = None
    diagnostics: list = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return len(self.iterates) - 1

    @property
    def final(self) -> ParamSet:
        return self.iterates[-1]

    @property
    def wall_clock_s(self) -> float:
        return float(sum(self.wall_clock_per_iter))


def split_samples(inst: Instance, T: int, seed) -> list:
    """Seeded partition into ``T`` disjoint groups of ``n // T`` rows.

    The trailing ``n mod T`` rows of the permutation are dropped.
    """
    T = int(T)
    if T < 1:
        raise ValueError("T must be >= 1")
    if T > inst.n:
        raise TooManyGroups(f"cannot split {inst.n} samples into {T} groups")
    gen = np.random.Generator(np.random.Philox(seed_sequence(seed)))
    perm = gen.permutation(inst.n)
    size = inst.n // T
    return [inst.subset(perm[t * size:(t + 1) * size]) for t in range(T)]


def assign_labels(inst: Instance, params) -> np.ndarray:
    """Index of the regressor with the smallest |residual|; ties go to the
    lowest index."""
    return np.argmin(np.abs(residuals(inst, params)), axis=1)


# Gram matrices with a reciprocal condition estimate below this go to QR;
# above it normal equations lose at most ~1e-12 relative accuracy
GRAM_RCOND_MIN = 1e-4


def _cluster_lstsq(X, y, method):
    if method == "auto" and X.shape[0] >= X.shape[1]:
        # G is symmetric, so its transpose is the same matrix in Fortran order
        # and LAPACK can factor it without a copy
        G = (X.T @ X).T
        anorm = float(np.abs(G).sum(axis=0).max())
        c, info = lapack.dpotrf(G, lower=False, clean=True, overwrite_a=True)
        if info == 0:
            rcond, info = lapack.dpocon(c, anorm)
            if info == 0 and rcond >= GRAM_RCOND_MIN:
                return scipy.linalg.cho_solve((c, False), X.T @ y, check_finite=False), X.shape[1]
    return solve_least_squares(X, y, full_output=True)


def refit(inst: Instance, labels, K: int, prev, diagnostics=None, method: str = "auto") -> ParamSet:
    """Per-component least squares on the assigned rows.

    A component with no rows keeps its previous value; rank-deficient
    components get the minimum-norm fit. Both cases are appended to
    ``diagnostics`` (if given) as ``(kind, component)`` tuples.

    ``method="auto"`` solves well-conditioned clusters through a Cholesky
    factorization of the Gram matrix and everything else through the
    pivoted-QR solver; ``method="qr"`` always uses the latter.
    """
    labels = np.asarray(labels)
    prev_th = thetas_of(prev)
    if prev_th.shape != (K, inst.d):
        raise DimensionMismatch(f"prev has shape {prev_th.shape}, expected {(K, inst.d)}")
    out = prev_th.copy()
    for j in range(K):
        rows = labels == j
        if not rows.any():
            if diagnostics is not None:
                diagnostics.append(("empty_cluster", j))
            continue
        out[j], rank = _cluster_lstsq(inst.X[rows], inst.y[rows], method)
        if rank < inst.d and diagnostics is not None:
            diagnostics.append(("rank_deficient", j))
    return ParamSet(out)


def _start_trace(inst, init, track_truth):
    if not isinstance(init, ParamSet):
        init = ParamSet(thetas_of(init))
    if init.d != inst.d:
        raise DimensionMismatch(f"init has d={init.d}, instance has d={inst.d}")
    truth = inst.truth if track_truth else None
    trace = Trace(iterates=[init], loss_seq=[loss(inst, init)])
    if truth is not None:
        trace.dist_to_truth = [dist(init, truth)]
    return init, truth, trace


def _movement(a: ParamSet, b: ParamSet) -> float:
    return float(np.max(np.linalg.norm(a.thetas - b.thetas, axis=1)))


def run_am(inst: Instance, init, cfg: AmConfig = AmConfig()) -> Trace:
    """Run up to ``cfg.max_rounds`` assign/refit rounds from ``init``.

    With ``cfg.sample_split`` round ``t`` only sees group ``t`` of
    :func:`split_samples`; the loss is always reported on the full sample.
    Stops early when no regressor moves by ``cfg.tol`` or, if set, when the
    distance to the truth drops to ``cfg.target_precision``.
    """
    params, truth, trace = _start_trace(inst, init, cfg.track_truth)
    groups = split_samples(inst, cfg.max_rounds, cfg.split_seed) if cfg.sample_split else None
    if cfg.target_precision is not None and truth is not None:
        if trace.dist_to_truth[0] <= cfg.target_precision:
            trace.reached_target_at = 0
            trace.labels_final = assign_labels(inst, params)
            return trace

    labels = None
    for t in range(cfg.max_rounds):
        work = groups[t] if groups is not None else inst
        diag = []
        start = time.perf_counter()
        labels = assign_labels(work, params)
        new = refit(work, labels, params.K, params, diag, cfg.ls_method)
        trace.wall_clock_per_iter.append(time.perf_counter() - start)
        trace.diagnostics.extend((t + 1, kind, j) for kind, j in diag)

        moved = _movement(new, params)
        params = new
        trace.iterates.append(params)
        trace.loss_seq.append(loss(inst, params))
        if truth is not None:
            trace.dist_to_truth.append(dist(params, truth))
            if cfg.target_precision is not None and trace.dist_to_truth[-1] <= cfg.target_precision:
                trace.reached_target_at = t + 1
                break
        if moved < cfg.tol:
            trace.converged_at = t + 1
            break

    trace.labels_final = labels if groups is None else assign_labels(inst, params)
    return trace
