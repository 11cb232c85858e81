"""Gaussian kernel evaluation, normalized Nystrom columns and Gram matrices."""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels


class DegenerateLandmarkError(ValueError):
    """Raised when a landmark has a non-positive self-similarity."""


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel ``exp(-||x - x'||^2 / (2 sigma2))``."""

    sigma2: float = 1.0
    variant: str = "gaussian"

    def __post_init__(self):
        if self.variant != "gaussian":
            raise ValueError(f"unsupported kernel variant {self.variant!r}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")


@dataclass
class Dataset:
    features: np.ndarray
    targets: np.ndarray
    name: str = ""

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.targets, dtype=np.float64).ravel()
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"features must be a non-empty n x d matrix, got shape {X.shape}")
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"{y.shape[0]} targets for {X.shape[0]} feature rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite entries")
        self.features = np.ascontiguousarray(X)
        self.targets = y

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    def subset(self, idx, name=None):
        idx = np.asarray(idx)
        return Dataset(self.features[idx], self.targets[idx], name or self.name)


def eval_kernel(spec, x, x2):
    x = np.asarray(x, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x2.shape}")
    diff = x - x2
    return float(np.exp(-np.sum(diff * diff) / (2.0 * spec.sigma2)))


def cross_kernel(spec, X, Z):
    """Kernel block ``K[i, j] = k(X[i], Z[j])`` computed from explicit differences."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    if X.shape[1] != Z.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
    out = np.empty((X.shape[0], Z.shape[0]))
    # row blocks keep the (rows, m, d) temporary bounded
    step = max(1, 2_000_000 // max(1, Z.shape[0] * Z.shape[1]))
    for s in range(0, X.shape[0], step):
        diff = X[s:s + step, None, :] - Z[None, :, :]
        out[s:s + step] = np.exp(-np.sum(diff * diff, axis=2) / (2.0 * spec.sigma2))
    return out


def compute_column(spec, data, m):
    """Normalized column ``c_m = K[:, m] / sqrt(k(x_m, x_m))``."""
    if not 0 <= m < data.n:
        raise IndexError(f"column index {m} out of range for n={data.n}")
    xm = data.features[m]
    kmm = eval_kernel(spec, xm, xm)
    if kmm <= 0:
        raise DegenerateLandmarkError(f"k(x_{m}, x_{m}) = {kmm} is not positive")
    diff = data.features - xm
    col = np.exp(-np.sum(diff * diff, axis=1) / (2.0 * spec.sigma2))
    return col / np.sqrt(kmm)


def gram_matrix(spec, data):
    return cross_kernel(spec, data.features, data.features)


@dataclass
class ColumnSource:
    """Normalized columns for a candidate set ``S`` of training indices.

    In ``precompute`` mode all ``M`` columns are materialized up front
    (memory n*M). In ``on_the_fly`` mode a column is recomputed whenever it
    is requested; the optimizer caches only the active ones.
    """

    spec: KernelSpec
    data: Dataset
    candidates: np.ndarray
    mode: str = "precompute"
    table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in ("precompute", "on_the_fly"):
            raise ValueError(f"unknown column mode {self.mode!r}")
        self.candidates = np.asarray(self.candidates, dtype=np.int64)
        if self.candidates.size and (self.candidates.min() < 0 or self.candidates.max() >= self.data.n):
            raise IndexError("candidate index out of range")
        # the Gaussian self-similarity is 1, so no landmark can be degenerate
        if self.mode == "precompute":
            self.table = np.ascontiguousarray(cross_kernel(self.spec, self.data.features[self.candidates],
                                                           self.data.features))
        else:
            self.table = np.zeros((0, self.data.n))

    @property
    def M(self):
        return self.candidates.shape[0]

    def column(self, j):
        """Column for candidate position ``j`` (0 <= j < M)."""
        if self.mode == "precompute":
            return self.table[j]
        X = self.data.features
        return _kernels.gaussian_column(X, X[self.candidates[j]], self.spec.sigma2)

    def __call__(self, j):
        return self.column(j)
