"""Weighted product-kernel conditional density estimator, its bandwidth derivatives, and thresholds."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._accel import USE_NUMBA, jit, pairwise_sum
from .kernels import KernelNorms, KernelProfile, _j_raw, _kernel_raw, j_scalar, kernel_scalar

__all__ = [
    "Dataset",
    "estimate_density",
    "threshold",
    "z_statistic",
]


@dataclass(frozen=True)
class Dataset:
    """``n`` joint observations W_i = (X_i, Y_i); the first ``d1`` columns are covariates."""

    samples: np.ndarray
    d1: int

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
            raise ValueError(f"samples must be a non-empty 2-D array, got shape {samples.shape}")
        if not 0 <= self.d1 < samples.shape[1]:
            raise ValueError(f"d1={self.d1} must lie in [0, {samples.shape[1] - 1}]")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite entries")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "_columns", np.ascontiguousarray(samples.T))

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]

    @property
    def d2(self) -> int:
        return self.d - self.d1

    @property
    def x(self) -> np.ndarray:
        return self.samples[:, : self.d1]

    @property
    def y(self) -> np.ndarray:
        return self.samples[:, self.d1 :]

    @property
    def columns(self) -> np.ndarray:
        """Column-major copy, shape (d, n)."""
        return self._columns


def _check_bandwidth(h, d):
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (d,):
        raise ValueError(f"bandwidth must have {d} components, got shape {h.shape}")
    if not np.all(h > 0) or not np.all(np.isfinite(h)):
        raise ValueError(f"bandwidth components must be positive and finite, got {h}")
    return h


def _check_point(w, d):
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (d,):
        raise ValueError(f"query point must have {d} coordinates, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("query point has non-finite coordinates")
    return w


@jit
def _terms_nb(kid, radius, cols, w, h, wts, jcol):
    d, n = cols.shape
    out = np.zeros(n)
    for i in range(n):
        skip = False
        for k in range(d):
            if abs(w[k] - cols[k, i]) > radius * h[k]:
                skip = True
                break
        if skip:
            continue
        prod = wts[i]
        for k in range(d):
            t = (w[k] - cols[k, i]) / h[k]
            if k == jcol:
                prod *= j_scalar(kid, t) / h[k]
            else:
                prod *= kernel_scalar(kid, t) / h[k]
        out[i] = prod
    return out


def _terms_np(kid, radius, cols, w, h, wts, jcol):
    d, n = cols.shape
    out = wts.astype(np.float64, copy=True)
    if math.isfinite(radius):
        keep = np.all(np.abs(w[:, None] - cols) <= radius * h[:, None], axis=0)
    else:
        keep = np.ones(n, dtype=bool)
    out[~keep] = 0.0
    idx = np.flatnonzero(keep)
    for k in range(d):
        t = (w[k] - cols[k, idx]) / h[k]
        factor = _j_raw(kid, t) if k == jcol else _kernel_raw(kid, t)
        out[idx] *= factor / h[k]
    return out


def _terms(k: KernelProfile, data: Dataset, w, h, weights, jcol):
    args = (k.kid, k.support_radius, data.columns, w, h, np.ascontiguousarray(weights), jcol)
    if USE_NUMBA:
        return _terms_nb(*args)
    return _terms_np(*args)


def _marginal_weights(marginal, data: Dataset) -> np.ndarray:
    values = np.asarray(marginal.cached_values, dtype=np.float64)
    if values.shape != (data.n,):
        raise ValueError("marginal cache does not match the dataset size")
    return 1.0 / values


def estimate_density(w, h, data: Dataset, marginal, k: KernelProfile) -> float:
    """(1/n) sum_i prod_j K_{h_j}(w_j - W_ij) / f_X(X_i).

    The result is signed for higher-order kernels and is not clipped.
    """
    w = _check_point(w, data.d)
    h = _check_bandwidth(h, data.d)
    terms = _terms(k, data, w, h, _marginal_weights(marginal, data), -1)
    return pairwise_sum(terms) / data.n


def z_statistic(w, h, j: int, data: Dataset, marginal, k: KernelProfile) -> float:
    """Partial derivative of :func:`estimate_density` with respect to ``h[j]`` (0-based ``j``)."""
    w = _check_point(w, data.d)
    h = _check_bandwidth(h, data.d)
    if not 0 <= j < data.d:
        raise IndexError(f"component index {j} out of range for d={data.d}")
    terms = _terms(k, data, w, h, _marginal_weights(marginal, data), j)
    return -pairwise_sum(terms) / (data.n * h[j])


def c_lambda(norms: KernelNorms, d: int) -> float:
    return 4.0 * norms.j_l2 * norms.k_l2 ** (d - 1)


def threshold(h, j: int, n: int, a: float, norms: KernelNorms, d: int) -> float:
    """C_lambda * sqrt((log n)^a / (n h_j^2 prod_k h_k)), C_lambda = 4 ||J||_2 ||K||_2^(d-1)."""
    h = np.asarray(h, dtype=np.float64)
    if np.any(h <= 0):
        raise ValueError(f"bandwidth components must be positive, got {h}")
    if n < 2:
        raise ValueError("threshold needs n >= 2")
    if a < 1:
        raise ValueError(f"exponent a must be >= 1, got {a}")
    if a == 1:
        warnings.warn("a = 1 is outside the guaranteed regime a > 1", stacklevel=2)
    return _threshold(float(h[j]), float(np.prod(h)), n, a, c_lambda(norms, d))


def _threshold(hj, hprod, n, a, clam):
    return clam * math.sqrt(math.log(n) ** a / (n * hj * hj * hprod))
