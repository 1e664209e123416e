"""Gradient-based heuristic: the AM label step followed by one gradient step
on each cluster's squared loss, plus the doubling step-size tuner."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .am import Trace, _movement, _start_trace, assign_labels
from .data import Instance, ParamSet
from .errors import DimensionMismatch, Divergence, NoStableStep
from .metrics import dist, loss, thetas_of

__all__ = ["GdConfig", "gd_step", "run_gd", "tune_step_size", "DIVERGENCE_FACTOR"]

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class GdConfig:
    gamma: float
    max_rounds: int = 500
    tol: float = 0.0
    target_precision: Optional[float] = None
    track_truth: bool = True

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")


def gd_step(inst: Instance, params, labels, gamma: float) -> ParamSet:
    """``theta_j -= gamma * sum_{i: z_i = j} 2 (<x_i, theta_j> - y_i) x_i``."""
    th = thetas_of(params)
    if th.shape[1] != inst.d:
        raise DimensionMismatch(f"params have d={th.shape[1]}, instance has d={inst.d}")
    labels = np.asarray(labels)
    if labels.shape != (inst.n,):
        raise DimensionMismatch("one label per sample required")
    K = th.shape[0]
    onehot = labels[:, None] == np.arange(K)[None, :]
    resid = inst.X @ th.T - inst.y[:, None]
    grad = 2.0 * (inst.X.T @ np.where(onehot, resid, 0.0))
    return ParamSet(th - gamma * grad.T)


def run_gd(inst: Instance, init, cfg: GdConfig) -> Trace:
    """Alternate label assignment and a single gradient step per round.

    Raises :class:`Divergence` (carrying the partial trace) once the loss
    exceeds ``1e6`` times its initial value or stops being finite.
    """
    params, truth, trace = _start_trace(inst, init, cfg.track_truth)
    cutoff = DIVERGENCE_FACTOR * trace.loss_seq[0]
    labels = None
    for t in range(cfg.max_rounds):
        start = time.perf_counter()
        labels = assign_labels(inst, params)
        new = gd_step(inst, params, labels, cfg.gamma)
        trace.wall_clock_per_iter.append(time.perf_counter() - start)

        moved = _movement(new, params) if np.all(np.isfinite(new.thetas)) else np.inf
        params = new
        trace.iterates.append(params)
        current = loss(inst, params)
        trace.loss_seq.append(current)
        if not np.isfinite(current) or current > cutoff:
            trace.labels_final = labels
            raise Divergence(f"loss {current:.3g} passed cutoff at round {t + 1}", trace)
        if truth is not None:
            trace.dist_to_truth.append(dist(params, truth))
            if cfg.target_precision is not None and trace.dist_to_truth[-1] <= cfg.target_precision:
                trace.reached_target_at = t + 1
                break
        if moved < cfg.tol:
            trace.converged_at = t + 1
            break
    trace.labels_final = labels
    return trace


def _probe_passes(inst, init, gamma, probe_rounds):
    cfg = GdConfig(gamma=gamma, max_rounds=probe_rounds, track_truth=False)
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            trace = run_gd(inst, init, cfg)
    except (Divergence, ValueError):
        # ValueError: iterate overflowed to a non-finite ParamSet
        return False
    seq = np.asarray(trace.loss_seq)
    slack = 1e-12 * seq[0]
    return bool(np.all(np.diff(seq) <= slack))


def tune_step_size(inst: Instance, init, probe_rounds: int = 10, max_doublings: int = 60) -> float:
    """Largest step ``gamma_0 * 2^k`` that keeps the loss monotone over a
    short probe run, starting from ``gamma_0 = 1 / (4 n)``.

    A probe fails on any loss increase (beyond round-off) or on divergence.
    """
    if probe_rounds < 2:
        raise ValueError("probe_rounds must be >= 2")
    gamma = 1.0 / (4.0 * inst.n)
    if not _probe_passes(inst, init, gamma, probe_rounds):
        raise NoStableStep(f"initial step {gamma:.3g} already oscillates")
    for _ in range(max_doublings):
        if not _probe_passes(inst, init, 2.0 * gamma, probe_rounds):
            break
        gamma *= 2.0
    return gamma
