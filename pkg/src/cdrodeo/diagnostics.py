"""Stopping-iteration bounds and the high-probability bandwidth set, from oracle knowledge of f.

Only meaningful on synthetic examples where the relevant components and the
p-th partial derivatives at the query point are known analytically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .estimator import c_lambda
from .kernels import KernelNorms
from .simulation import BENCH_POINT, true_f, true_marginal

__all__ = [
    "OracleDensity",
    "TheoryDiagnostics",
    "compute_bounds",
    "in_Hhp",
    "benchmark_oracle",
    "recover_theta",
    "stopping_exponents",
]


@dataclass(frozen=True)
class OracleDensity:
    """Analytic facts about f at the query point; component indices are 0-based."""

    d: int
    relevant_set: frozenset
    p: int
    partials: dict  # j -> d^p f / dw_j^p at w, for j in relevant_set
    f: Optional[Callable] = None
    sup_f_local: Optional[float] = None
    delta: Optional[float] = None

    def __post_init__(self):
        if not self.relevant_set:
            raise ValueError("relevant_set must be non-empty")
        if set(self.partials) != set(self.relevant_set):
            raise ValueError("partials must be given for exactly the relevant components")
        if any(v == 0 for v in self.partials.values()):
            raise ValueError("p-th partials of relevant components must be non-zero")
        if self.delta is not None and not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def r(self) -> int:
        return len(self.relevant_set)


@dataclass(frozen=True)
class TheoryDiagnostics:
    c_lambda: float
    c_tau: float
    c_T: float
    tau_n: float
    T_n: float
    n: int
    beta: float

    @property
    def hp_exponent_range(self) -> range:
        """Admissible theta for relevant components: floor(tau_n)+1 .. floor(T_n)."""
        return range(math.floor(self.tau_n) + 1, math.floor(self.T_n) + 1)

    def to_dict(self) -> dict:
        rng = self.hp_exponent_range
        return {
            "n": self.n,
            "beta": self.beta,
            "c_lambda": self.c_lambda,
            "c_tau": self.c_tau,
            "c_T": self.c_T,
            "tau_n": self.tau_n,
            "T_n": self.T_n,
            "hp_exponent_range": [rng.start, rng.stop - 1],
        }


def compute_bounds(
    oracle: OracleDensity, n: int, beta: float, a: float, norms: KernelNorms
) -> TheoryDiagnostics:
    p, d, r = oracle.p, oracle.d, oracle.r
    if p >= len(norms.moments_k) or abs(norms.moments_k[p]) < 1e-12:
        raise ValueError(f"kernel has no non-zero moment of order {p}; its order does not match p")
    abs_partials = [abs(v) for v in oracle.partials.values()]
    lo, hi = min(abs_partials), max(abs_partials)
    clam = c_lambda(norms, d)
    c_tau = (4.0 * math.factorial(p - 1) * clam / (lo * norms.moments_k[p])) ** 2
    c_T = (lo / (24.0 * hi)) ** 2
    tau, T = stopping_exponents(c_tau, c_T, n, p, r, d, a, beta)
    diag = TheoryDiagnostics(c_lambda=clam, c_tau=c_tau, c_T=c_T, tau_n=tau, T_n=T, n=n, beta=beta)
    if len(diag.hp_exponent_range) == 0:
        warnings.warn(f"empty exponent interval at n={n}: tau_n={tau:.3f}, T_n={T:.3f}", stacklevel=2)
    elif diag.hp_exponent_range.stop <= 0:
        warnings.warn(f"no nonnegative exponent admissible at n={n}: tau_n={tau:.3f}, T_n={T:.3f}", stacklevel=2)
    return diag


def stopping_exponents(c_tau: float, c_T: float, n: int, p: int, r: int, d: int, a: float, beta: float):
    """(tau_n, T_n) from the constants; raw values, no clamping."""
    log_n, log_ib = math.log(n), math.log(1.0 / beta)
    tau = math.log(n / (c_tau * log_n ** (2 * p + d + a))) / ((2 * p + r) * log_ib)
    return tau, tau + math.log(1.0 / c_T) / ((2 * p + 1) * log_ib)


def recover_theta(h, n: int, beta: float) -> np.ndarray:
    """Real-valued exponents theta with h_j = beta**theta_j / log n."""
    h = np.asarray(h, dtype=np.float64)
    return np.log(h * math.log(n)) / math.log(beta)


def in_Hhp(h, diag: TheoryDiagnostics, relevant_set, n: int, beta: float) -> bool:
    theta = recover_theta(h, n, beta)
    rounded = np.rint(theta)
    if np.any(np.abs(theta - rounded) > 1e-9 * np.maximum(1.0, np.abs(theta))):
        return False
    admissible = diag.hp_exponent_range
    for j, t in enumerate(rounded.astype(np.int64)):
        if j in relevant_set:
            if t not in admissible:
                return False
        elif t != 0:
            return False
    return True


def benchmark_oracle(n: int, p: int = 2, support_radius: float = 1.0) -> OracleDensity:
    """Oracle for the benchmark density at w = (0, 1, 0, 0, 1).

    x1 is locally constant (the indicator jumps only at +-1), x3 and x4 never
    enter f, so the relevant components are x2 and y. At (x2, y) = (1, 1):
    d2f/dx2^2 = -4/e and d2f/dy^2 = 1/e.
    """
    if p != 2:
        raise ValueError("only p = 2 partials are tabulated for the benchmark oracle")
    h0 = 1.0 / math.log(n)
    reach = support_radius * h0
    if reach >= 1.0:
        raise ValueError("initial neighbourhood reaches the x1 discontinuity")
    e_inv = math.exp(-1.0)
    grid = np.linspace(1.0 - reach, 1.0 + reach, 201)
    s, y = np.meshgrid(grid, grid)
    sup_f = float(np.max(np.exp(-y / s**2) / s**2))
    delta = true_marginal(np.array([reach, 1.0 + reach, reach, reach]))
    return OracleDensity(
        d=5,
        relevant_set=frozenset({1, 4}),
        p=2,
        partials={1: -4.0 * e_inv, 4: e_inv},
        f=true_f,
        sup_f_local=sup_f,
        delta=delta,
    )

