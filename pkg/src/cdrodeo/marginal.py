"""Covariate density plug-in: a known analytic density or a truncated product-kernel KDE."""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ._accel import USE_NUMBA, jit
from .estimator import Dataset
from .kernels import KernelProfile, _kernel_raw, get_kernel, kernel_scalar

__all__ = [
    "MarginalConfig",
    "MarginalModel",
    "fit_marginal_kde",
    "kde_bandwidth",
    "marginal_at",
    "marginal_known",
    "default_floor",
]


@dataclass(frozen=True)
class MarginalConfig:
    """``c_exponent`` is c in n_X = n^c; ``floor_rule`` is ``"paper"`` or a positive float."""

    c_exponent: float = 2.0
    kernel_name: str = "biweight"
    floor_rule: Union[str, float] = "paper"

    def __post_init__(self):
        if not self.c_exponent > 1:
            raise ValueError(f"c_exponent must exceed 1, got {self.c_exponent}")
        if self.floor_rule != "paper":
            if not float(self.floor_rule) > 0:
                raise ValueError(f"fixed floor must be positive, got {self.floor_rule}")


@dataclass(frozen=True)
class MarginalModel:
    kind: str  # "known" or "kde"
    cached_values: Optional[np.ndarray] = None
    density: Optional[Callable] = None
    aux_sample: Optional[np.ndarray] = None
    h_x: Optional[float] = None
    floor: Optional[float] = None
    kernel_x: Optional[KernelProfile] = None

    def with_cache(self, data: Dataset) -> "MarginalModel":
        """Copy of the model with values precomputed at every X_i of ``data``."""
        if self.kind == "known":
            return marginal_known(self.density, data)
        values = marginal_at(self, data.x)
        return dataclasses.replace(self, cached_values=_readonly(values))


def _readonly(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def marginal_known(density: Optional[Callable], data: Dataset) -> MarginalModel:
    """Use the true covariate density; ``density`` maps an (m, d1) array to m values.

    ``density=None`` is the constant 1 (unconditional estimation, d1 = 0).
    """
    if density is None:
        values = np.ones(data.n)
    else:
        values = np.asarray(density(data.x), dtype=np.float64).reshape(data.n)
    bad = np.flatnonzero(~(values > 0))
    if bad.size:
        i = int(bad[0])
        raise ValueError(
            f"covariate density must be positive at every sample point; "
            f"f_X(X_{i}) = {values[i]!r} at X_{i} = {data.x[i].tolist()}"
        )
    return MarginalModel(kind="known", cached_values=_readonly(values), density=density)


def kde_bandwidth(n_x: int, c: float, d1: int) -> float:
    """h_X = n_X^(-(c - 1) / (c d1))."""
    return float(n_x) ** (-(c - 1.0) / (c * d1))


def default_floor(n_main: int) -> float:
    """(log n)^(-1/4)."""
    if n_main < 3:
        raise ValueError(f"the (log n)^(-1/4) floor needs n >= 3, got {n_main}")
    return math.log(n_main) ** -0.25


def _kde_kernel_for(family: str, d1: int, c: float) -> KernelProfile:
    base = family.strip().lower().rstrip("4")
    required = max(2, math.ceil(d1 / (2.0 * (c - 1.0))))
    if required > 4:
        warnings.warn(
            f"KDE kernel order {required} requested for d1={d1}, c={c}; using order 4", stacklevel=3
        )
    return get_kernel(base if required <= 2 else base + "4")


def fit_marginal_kde(
    aux_sample, n_main: int, cfg: MarginalConfig, data: Optional[Dataset] = None
) -> MarginalModel:
    """Truncated product-kernel KDE fitted on an auxiliary covariate sample.

    Evaluation returns ``max(kde(u), floor)``. With ``data`` the values at
    every X_i are cached, which the estimator requires.
    """
    aux = np.asarray(aux_sample, dtype=np.float64)
    if aux.ndim == 1:
        aux = aux[:, None]
    if aux.ndim != 2 or aux.shape[0] == 0 or aux.shape[1] == 0:
        raise ValueError(f"auxiliary sample must be a non-empty (n_X, d1) array, got {aux.shape}")
    if n_main < 3:
        raise ValueError(f"n_main must be at least 3, got {n_main}")
    n_x, d1 = aux.shape
    floor = default_floor(n_main) if cfg.floor_rule == "paper" else float(cfg.floor_rule)
    order = np.argsort(aux[:, 0], kind="stable")
    model = MarginalModel(
        kind="kde",
        aux_sample=_readonly(aux[order]),
        h_x=kde_bandwidth(n_x, cfg.c_exponent, d1),
        floor=floor,
        kernel_x=_kde_kernel_for(cfg.kernel_name, d1, cfg.c_exponent),
    )
    if data is not None:
        if data.d1 != d1:
            raise ValueError(f"auxiliary sample has {d1} columns but the dataset has d1={data.d1}")
        model = model.with_cache(data)
    return model


@jit
def _kde_nb(kid, radius, aux, first_col, points, h):
    m, d1 = points.shape
    n_x = aux.shape[0]
    out = np.empty(m)
    scale = h**d1
    for q in range(m):
        lo, hi = 0, n_x
        if radius < np.inf:
            lo = np.searchsorted(first_col, points[q, 0] - radius * h)
            hi = np.searchsorted(first_col, points[q, 0] + radius * h, side="right")
        acc = 0.0
        for i in range(lo, hi):
            prod = 1.0
            for k in range(d1):
                t = (points[q, k] - aux[i, k]) / h
                if abs(t) > radius:
                    prod = 0.0
                    break
                prod *= kernel_scalar(kid, t)
            acc += prod
        out[q] = acc / (n_x * scale)
    return out


def _kde_np(kid, radius, aux, first_col, points, h):
    m, d1 = points.shape
    n_x = aux.shape[0]
    out = np.empty(m)
    chunk = max(1, 2_000_000 // n_x)
    for s in range(0, m, chunk):
        p = points[s : s + chunk]
        prod = np.ones((p.shape[0], n_x))
        for k in range(d1):
            prod *= _kernel_raw(kid, (p[:, k, None] - aux[None, :, k]) / h)
        out[s : s + chunk] = prod.sum(axis=1) / (n_x * h**d1)
    return out


def marginal_at(model: MarginalModel, u) -> Union[float, np.ndarray]:
    """Value of the plug-in at ``u``: one point of shape (d1,) or a batch (m, d1)."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim not in (1, 2):
        raise ValueError(f"expected a point (d1,) or a batch (m, d1), got shape {u.shape}")
    single = u.ndim == 1
    points = u[None, :] if single else u
    if model.kind == "known":
        if model.density is None:
            values = np.ones(points.shape[0])
        else:
            values = np.asarray(model.density(points), dtype=np.float64).reshape(points.shape[0])
    else:
        aux = model.aux_sample
        args = (
            model.kernel_x.kid, model.kernel_x.support_radius, aux,
            np.ascontiguousarray(aux[:, 0]), np.ascontiguousarray(points), model.h_x,
        )
        kde = _kde_nb(*args) if USE_NUMBA else _kde_np(*args)
        values = np.maximum(kde, model.floor)
    return float(values[0]) if single else values
