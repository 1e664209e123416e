"""Dense linear-algebra kernel: seeded Gaussian sampling, least squares and
top-k symmetric eigenpairs."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NoConvergence, NotSymmetric, RankDeficientWarning

__all__ = [
    "EigPairs",
    "seed_sequence",
    "uniform_stream",
    "standard_gaussian_matrix",
    "solve_least_squares",
    "top_k_eigpairs",
]

RANK_RTOL = 1e-10
SYMMETRY_RTOL = 1e-9


def seed_sequence(seed, *keys) -> np.random.SeedSequence:
    """Build a SeedSequence from ``seed`` (int or tuple of ints) plus extra keys.

    Distinct key tuples give statistically independent streams, so a root seed
    can be split into named sub-streams without coordination.
    """
    if isinstance(seed, np.random.SeedSequence):
        if not keys:
            return seed
        entropy = list(np.atleast_1d(seed.entropy)) + list(seed.spawn_key)
    elif np.ndim(seed) == 0:
        entropy = [int(seed)]
    else:
        entropy = [int(s) for s in seed]
    return np.random.SeedSequence([*entropy, *(int(k) for k in keys)])


def uniform_stream(seed, size) -> np.ndarray:
    """Uniform draws in [0, 1) from a counter-based (Philox) generator."""
    gen = np.random.Generator(np.random.Philox(seed_sequence(seed)))
    return gen.random(size)


def standard_gaussian_matrix(seed, n: int, d: int) -> np.ndarray:
    """n x d matrix of i.i.d. N(0, 1) draws.

    Box-Muller over a Philox uniform stream; a pure function of
    ``(seed, n, d)``.
    """
    n, d = int(n), int(d)
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    total = n * d
    pairs = (total + 1) // 2
    u = uniform_stream(seed, 2 * pairs).reshape(2, pairs)
    # 1 - u lies in (0, 1], keeps the log finite
    radius = np.sqrt(-2.0 * np.log1p(-u[0]))
    angle = 2.0 * np.pi * u[1]
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
    return z[:total].reshape(n, d)


def solve_least_squares(A, b, *, full_output: bool = False):
    """Minimum-norm minimizer of ``||A x - b||^2``.

    Uses a complete orthogonal factorization (LAPACK ``gelsy``: QR with
    column pivoting) with rank cut-off ``1e-10 * sigma_max``. A rank-deficient
    design still returns the minimum-norm solution; a
    :class:`RankDeficientWarning` is issued unless ``full_output`` is set, in
    which case ``(x, rank)`` is returned and the caller handles it.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise ValueError(f"incompatible shapes A{A.shape}, b{b.shape}")
    n, d = A.shape
    if n < 1 or d < 1:
        raise ValueError("empty least-squares problem")
    x, _, rank, _ = scipy.linalg.lstsq(
        A, b, cond=RANK_RTOL, lapack_driver="gelsy", check_finite=False
    )
    if full_output:
        return x, int(rank)
    if rank < d:
        warnings.warn(
            f"least-squares design has rank {rank} < {d}; returning min-norm solution",
            RankDeficientWarning,
            stacklevel=2,
        )
    return x


@dataclass(frozen=True)
class EigPairs:
    values: np.ndarray  # (k,), descending
    vectors: np.ndarray  # (d, k), orthonormal columns


def _check_symmetric(S):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    asym = float(np.max(np.abs(S - S.T))) if S.size else 0.0
    if asym > SYMMETRY_RTOL * scale:
        raise NotSymmetric(f"asymmetry {asym:.3g} exceeds {SYMMETRY_RTOL} relative")
    return S


def top_k_eigpairs(
    S,
    k: int,
    *,
    tol: float = 1e-9,
    max_iter: int = 10_000,
    oversample: int = 5,
    seed=0,
) -> EigPairs:
    """Top-k algebraic eigenpairs of a symmetric matrix by block power iteration.

    The matrix is shifted to be positive semidefinite (Gershgorin bound) so
    that dominance in magnitude coincides with algebraic order. Each sweep
    multiplies the block, re-orthonormalizes it by QR and rotates it onto its
    Ritz vectors; a pair is accepted once ``||S v - lam v|| <= tol (1 + |lam|)``.
    """
    S = _check_symmetric(S)
    d = S.shape[0]
    k = int(k)
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= {d}, got k={k}")

    off = np.sum(np.abs(S), axis=1) - np.abs(np.diag(S))
    shift = max(0.0, -float(np.min(np.diag(S) - off)))
    A = S + shift * np.eye(d) if shift > 0 else S

    p = min(d, k + oversample)
    Q, _ = np.linalg.qr(standard_gaussian_matrix(seed, d, p))
    for _ in range(max_iter):
        Z = A @ Q
        Q, _ = np.linalg.qr(Z)
        H = Q.T @ A @ Q
        theta, W = np.linalg.eigh((H + H.T) / 2)
        order = np.argsort(theta)[::-1]
        theta, W = theta[order], W[:, order]
        Q = Q @ W
        lam = theta[:k] - shift
        resid = np.linalg.norm(S @ Q[:, :k] - Q[:, :k] * lam, axis=0)
        if np.all(resid <= tol * (1.0 + np.abs(lam))):
            return EigPairs(values=lam.copy(), vectors=Q[:, :k].copy())
    raise NoConvergence(f"block power iteration did not converge in {max_iter} sweeps")
