"""Univariate kernel profiles: K, K', the transform J(t) = K(t) + t K'(t), and cached norms."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from ._accel import jit

__all__ = [
    "KERNEL_NAMES",
    "KernelNorms",
    "KernelProfile",
    "compute_norms",
    "get_kernel",
    "j_eval",
    "make_biweight4_kernel",
    "make_biweight_kernel",
    "make_gaussian4_kernel",
    "make_gaussian_kernel",
]

GAUSSIAN, BIWEIGHT, GAUSSIAN4, BIWEIGHT4 = 0, 1, 2, 3
KERNEL_NAMES = ("gaussian", "biweight", "gaussian4", "biweight4")

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
# Quadrature window for the Gaussian family; tail mass beyond is < 1e-15.
GAUSSIAN_TRUNCATION = 8.0
# t^8 phi(t) still carries ~1e-8 beyond |t| = 8, so moments use a wider window.
GAUSSIAN_MOMENT_TRUNCATION = 12.0
QUAD_TOL = 1e-10


# The raw formulas below accept scalars or arrays. The jitted copies are
# called from the numba hot loops with scalar arguments only.

def _kernel_raw(kid, t):
    if kid == GAUSSIAN:
        return _INV_SQRT_2PI * np.exp(-0.5 * t * t)
    if kid == BIWEIGHT:
        s = 1.0 - t * t
        return 0.9375 * s * s * (np.abs(t) <= 1.0)
    if kid == GAUSSIAN4:
        return 0.5 * (3.0 - t * t) * _INV_SQRT_2PI * np.exp(-0.5 * t * t)
    s = 1.0 - t * t
    return 1.640625 * s * s * (1.0 - 3.0 * t * t) * (np.abs(t) <= 1.0)


def _deriv_raw(kid, t):
    if kid == GAUSSIAN:
        return -t * _INV_SQRT_2PI * np.exp(-0.5 * t * t)
    if kid == BIWEIGHT:
        return -3.75 * t * (1.0 - t * t) * (np.abs(t) <= 1.0)
    if kid == GAUSSIAN4:
        return 0.5 * t * (t * t - 5.0) * _INV_SQRT_2PI * np.exp(-0.5 * t * t)
    return -3.28125 * t * (1.0 - t * t) * (5.0 - 9.0 * t * t) * (np.abs(t) <= 1.0)


def _j_raw(kid, t):
    return _kernel_raw(kid, t) + t * _deriv_raw(kid, t)


kernel_scalar = jit(_kernel_raw)
deriv_scalar = jit(_deriv_raw)


@jit
def j_scalar(kid, t):
    return kernel_scalar(kid, t) + t * deriv_scalar(kid, t)


@dataclass(frozen=True)
class KernelNorms:
    k_l1: float
    k_l2: float
    k_sup: float
    j_l1: float
    j_l2: float
    j_sup: float
    moments_k: tuple[float, ...]
    moments_j: tuple[float, ...]


@dataclass(frozen=True)
class KernelProfile:
    """A univariate kernel of a given order.

    ``support_radius`` is ``math.inf`` for kernels without compact support.
    """

    name: str
    kid: int
    order: int
    support_radius: float
    norms: KernelNorms

    @property
    def compact(self) -> bool:
        return math.isfinite(self.support_radius)

    @property
    def quadrature_radius(self) -> float:
        return self.support_radius if self.compact else GAUSSIAN_TRUNCATION

    def eval(self, t):
        return _kernel_raw(self.kid, np.asarray(t, dtype=np.float64))

    def deriv(self, t):
        return _deriv_raw(self.kid, np.asarray(t, dtype=np.float64))

    def j(self, t):
        return _j_raw(self.kid, np.asarray(t, dtype=np.float64))


def j_eval(k: KernelProfile, t):
    """J(t) = K(t) + t K'(t)."""
    t = np.asarray(t, dtype=np.float64)
    return k.eval(t) + t * k.deriv(t)


def _quad(func, lo, hi, breakpoints=()):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(
                func, lo, hi, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=500,
                points=list(breakpoints) or None,
            )
        except integrate.IntegrationWarning as exc:
            raise ValueError(f"kernel quadrature did not converge on [{lo}, {hi}]: {exc}") from exc
    return value


def _sup_abs(func, radius):
    grid = np.linspace(-radius, radius, 16001)
    vals = np.abs(func(grid))
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = optimize.minimize_scalar(
        lambda t: -abs(float(func(t))), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-12},
    )
    return max(float(vals[i]), -float(res.fun))


def compute_norms(kid: int, order: int, radius: float) -> KernelNorms:
    """L1, L2, sup norms of K and J and their moments 0..max(order, 4) by adaptive quadrature.

    ``radius`` is the support radius, or ``math.inf`` for the Gaussian family.
    """
    K = lambda t: _kernel_raw(kid, t)
    J = lambda t: _j_raw(kid, t)
    mom_radius = radius if math.isfinite(radius) else GAUSSIAN_MOMENT_TRUNCATION
    radius = radius if math.isfinite(radius) else GAUSSIAN_TRUNCATION
    lo, hi = -radius, radius
    # Integrands with kinks (|.|) or sign changes get explicit break points.
    k_roots = _abs_breaks(K, radius)
    j_roots = _abs_breaks(J, radius)
    n_mom = max(order, 4)
    return KernelNorms(
        k_l1=_quad(lambda t: abs(K(t)), lo, hi, k_roots),
        k_l2=math.sqrt(_quad(lambda t: K(t) ** 2, lo, hi)),
        k_sup=_sup_abs(K, radius),
        j_l1=_quad(lambda t: abs(J(t)), lo, hi, j_roots),
        j_l2=math.sqrt(_quad(lambda t: J(t) ** 2, lo, hi)),
        j_sup=_sup_abs(J, radius),
        moments_k=tuple(
            _quad(lambda t, l=l: t**l * K(t), -mom_radius, mom_radius) for l in range(n_mom + 1)
        ),
        moments_j=tuple(
            _quad(lambda t, l=l: t**l * J(t), -mom_radius, mom_radius) for l in range(n_mom + 1)
        ),
    )


def _abs_breaks(func, radius):
    grid = np.linspace(-radius, radius, 4001)
    vals = func(grid)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0 or fa * fb >= 0.0:
            continue
        roots.append(optimize.brentq(func, a, b, xtol=1e-14))
    return roots


def _make(name: str, kid: int, order: int, radius: float) -> KernelProfile:
    norms = compute_norms(kid, order, radius)
    return KernelProfile(name=name, kid=kid, order=order, support_radius=radius, norms=norms)


_CACHE: dict[str, KernelProfile] = {}


def make_gaussian_kernel() -> KernelProfile:
    return get_kernel("gaussian")


def make_biweight_kernel() -> KernelProfile:
    """K(t) = (15/16)(1 - t^2)^2 on [-1, 1]; C^1, order 2."""
    return get_kernel("biweight")


def make_gaussian4_kernel() -> KernelProfile:
    """Order-4 Gaussian: (3 - t^2) phi(t) / 2."""
    return get_kernel("gaussian4")


def make_biweight4_kernel() -> KernelProfile:
    """Order-4 biweight: (105/64)(1 - t^2)^2 (1 - 3 t^2) on [-1, 1]."""
    return get_kernel("biweight4")


_SPECS = {
    "gaussian": (GAUSSIAN, 2, math.inf),
    "biweight": (BIWEIGHT, 2, 1.0),
    "gaussian4": (GAUSSIAN4, 4, math.inf),
    "biweight4": (BIWEIGHT4, 4, 1.0),
}


def get_kernel(name: str) -> KernelProfile:
    """Kernel profile by name; norms are computed once per process."""
    key = name.strip().lower()
    if key not in _SPECS:
        raise ValueError(f"unknown kernel {name!r}; choose from {', '.join(KERNEL_NAMES)}")
    if key not in _CACHE:
        _CACHE[key] = _make(key, *_SPECS[key])
    return _CACHE[key]
