"""Synthetic mixed-linear-regression instances and initializations."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from math import log
from typing import Optional

import numpy as np

from .errors import DimensionMismatch
from .linalg import seed_sequence, standard_gaussian_matrix, uniform_stream

__all__ = [
    "GroundTruth",
    "Instance",
    "ParamSet",
    "random_truth",
    "sample_instance",
    "perturbed_init",
    "boundary_radius",
    "write_instance_csv",
    "read_instance_csv",
]

# sub-stream keys under a root seed; noise has its own so sigma never moves X
_COVARIATES, _LABELS, _NOISE, _TRUTH, _DIRECTIONS = range(5)


def _as_matrix(thetas):
    arr = np.array(thetas, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"expected K x d parameters, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class ParamSet:
    """K candidate regressors stacked row-wise, shape (K, d)."""

    thetas: np.ndarray

    def __post_init__(self):
        arr = _as_matrix(self.thetas)
        if not np.all(np.isfinite(arr)):
            raise ValueError("parameters must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "thetas", arr)

    @property
    def K(self) -> int:
        return self.thetas.shape[0]

    @property
    def d(self) -> int:
        return self.thetas.shape[1]

    def permuted(self, perm) -> "ParamSet":
        return ParamSet(self.thetas[list(perm)])


@dataclass(frozen=True)
class GroundTruth:
    thetas: np.ndarray
    mixing: np.ndarray
    sigma: float = 0.0

    def __post_init__(self):
        arr = _as_matrix(self.thetas)
        mixing = np.array(self.mixing, dtype=float)
        if mixing.shape != (arr.shape[0],):
            raise DimensionMismatch("one mixing weight per component required")
        if np.any(mixing < 0) or abs(mixing.sum() - 1.0) > 1e-12:
            raise ValueError("mixing weights must be non-negative and sum to 1")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError("sigma must be finite and >= 0")
        arr.setflags(write=False)
        mixing.setflags(write=False)
        object.__setattr__(self, "thetas", arr)
        object.__setattr__(self, "mixing", mixing)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def K(self) -> int:
        return self.thetas.shape[0]

    @property
    def d(self) -> int:
        return self.thetas.shape[1]

    def params(self) -> ParamSet:
        return ParamSet(self.thetas)

    def separation(self) -> float:
        """Smallest pairwise distance between true regressors."""
        if self.K < 2:
            return float("inf")
        diffs = self.thetas[:, None, :] - self.thetas[None, :, :]
        dist = np.linalg.norm(diffs, axis=-1)
        return float(dist[np.triu_indices(self.K, 1)].min())


@dataclass(frozen=True)
class Instance:
    X: np.ndarray
    y: np.ndarray
    z: Optional[np.ndarray] = None
    truth: Optional[GroundTruth] = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise DimensionMismatch(f"X{X.shape} and y{y.shape} do not align")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.z is not None:
            z = np.asarray(self.z, dtype=np.int64)
            if z.shape != y.shape:
                raise DimensionMismatch("one latent label per row required")
            object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Instance":
        idx = np.asarray(idx)
        z = None if self.z is None else self.z[idx]
        return replace(self, X=self.X[idx], y=self.y[idx], z=z)


def random_truth(K: int, d: int, seed, mixing=None, sigma: float = 0.0) -> GroundTruth:
    """Regressors with i.i.d. N(0, 1) entries; uniform mixing unless given."""
    thetas = standard_gaussian_matrix(seed_sequence(seed, _TRUTH), K, d)
    if mixing is None:
        mixing = np.full(K, 1.0 / K)
    return GroundTruth(thetas, mixing, sigma)


def sample_instance(truth: GroundTruth, n: int, seed) -> Instance:
    """Draw ``n`` samples ``y_i = <x_i, theta_{z_i}> + w_i`` with x_i ~ N(0, I)."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    X = standard_gaussian_matrix(seed_sequence(seed, _COVARIATES), n, truth.d)
    u = uniform_stream(seed_sequence(seed, _LABELS), n)
    cdf = np.cumsum(truth.mixing)
    cdf[-1] = 1.0
    z = np.minimum(np.searchsorted(cdf, u, side="right"), truth.K - 1)
    y = np.einsum("ij,ij->i", X, truth.thetas[z])
    if truth.sigma > 0:
        w = standard_gaussian_matrix(seed_sequence(seed, _NOISE), n, 1)[:, 0]
        y = y + truth.sigma * w
    return Instance(X=X, y=y, z=z, truth=truth)


def boundary_radius(truth: GroundTruth, n: int) -> float:
    """Largest initialization error admitted by the super-linear regime:
    ``min_pair ||theta_i - theta_j|| / (2 log n)``."""
    return truth.separation() / (2.0 * log(n))


def perturbed_init(truth: GroundTruth, radius: float, seed) -> ParamSet:
    """Shift every true regressor by exactly ``radius`` along an independent
    uniformly random direction."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    g = standard_gaussian_matrix(seed_sequence(seed, _DIRECTIONS), truth.K, truth.d)
    u = g / np.linalg.norm(g, axis=1, keepdims=True)
    return ParamSet(truth.thetas + radius * u)


def write_instance_csv(inst: Instance, path) -> None:
    """Header ``i,y,z,x_0,...``; floats with 17 significant digits."""
    fmt = "{:.17g}".format
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "y", "z"] + [f"x_{j}" for j in range(inst.d)])
        for i in range(inst.n):
            z = "" if inst.z is None else int(inst.z[i])
            w.writerow([i, fmt(inst.y[i]), z] + [fmt(v) for v in inst.X[i]])


def read_instance_csv(path) -> Instance:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[:3] != ["i", "y", "z"]:
        raise ValueError(f"unexpected instance header {header[:3]}")
    y = np.array([float(r[1]) for r in body])
    z_raw = [r[2] for r in body]
    z = None if any(v == "" for v in z_raw) else np.array([int(v) for v in z_raw])
    X = np.array([[float(v) for v in r[3:]] for r in body]).reshape(len(body), len(header) - 3)
    return Instance(X=X, y=y, z=z)
