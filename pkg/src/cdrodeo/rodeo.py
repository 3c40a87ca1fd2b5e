"""Greedy per-point bandwidth selection (CDRodeo) with a replayable decision trace."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._accel import USE_NUMBA, jit, pairwise_sum
from .estimator import Dataset, _check_point, c_lambda, _threshold, estimate_density
from .kernels import KernelProfile, _j_raw, _kernel_raw, j_scalar, kernel_scalar

__all__ = [
    "IterationRecord",
    "RodeoConfig",
    "RodeoResult",
    "RodeoTrace",
    "TestRecord",
    "product_floor",
    "run_cdrodeo",
    "theory_h0",
]

log = logging.getLogger(__name__)

SHRINK, DEACTIVATE = "shrink", "deactivate"


def product_floor(n: int) -> float:
    """Loop guard: iterations continue while prod(h) >= log(n) / n."""
    if n < 3:
        raise ValueError(f"the product floor needs n >= 3, got {n}")
    return math.log(n) / n


def theory_h0(n: int) -> float:
    """Initial bandwidth 1 / log n used by the theory."""
    if n < 3:
        raise ValueError(f"1/log n needs n >= 3, got {n}")
    return 1.0 / math.log(n)


@dataclass(frozen=True)
class RodeoConfig:
    """``h0=None`` means the theory value 1/log n, resolved per dataset."""

    beta: float = 0.95
    h0: Optional[float] = 0.4
    a: float = 1.1
    max_iterations: int = 10_000
    batch: bool = False

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.h0 is not None and not self.h0 > 0:
            raise ValueError(f"h0 must be positive, got {self.h0}")
        if self.a < 1:
            raise ValueError(f"a must be >= 1, got {self.a}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")

    def resolve_h0(self, n: int) -> float:
        return theory_h0(n) if self.h0 is None else float(self.h0)


@dataclass(frozen=True)
class TestRecord:
    j: int
    h: tuple  # full bandwidth vector at test time
    z: float
    lam: float
    decision: str


@dataclass
class IterationRecord:
    iteration: int
    active_before: tuple
    tests: list = field(default_factory=list)
    h_after: tuple = ()


@dataclass
class RodeoTrace:
    iterations: list = field(default_factory=list)

    def rows(self):
        """Flat rows (iter, j, h_j, Z, lambda, decision) with 1-based ``j``."""
        for it in self.iterations:
            for t in it.tests:
                yield it.iteration, t.j + 1, t.h[t.j], t.z, t.lam, t.decision

    @property
    def active_sizes(self):
        return [len(it.active_before) for it in self.iterations]


@dataclass
class RodeoResult:
    h_final: np.ndarray
    theta: np.ndarray
    estimate: float
    stop_reason: str
    h0: float
    trace: RodeoTrace
    kernel_evals: int

    def to_dict(self) -> dict:
        return {
            "h_final": [float(v) for v in self.h_final],
            "theta": [int(v) for v in self.theta],
            "estimate": float(self.estimate),
            "stop_reason": self.stop_reason,
        }


@jit
def _kernel_column_nb(kid, x, wk, hk):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = kernel_scalar(kid, (wk - x[i]) / hk) / hk
    return out


def _kernel_column_np(kid, x, wk, hk):
    return _kernel_raw(kid, (wk - x) / hk) / hk


@jit
def _z_terms_nb(kid, x, wj, hj, frozen, kc, others):
    m = x.shape[0]
    out = np.empty(m)
    for i in range(m):
        prod = frozen[i]
        for r in range(others.shape[0]):
            prod *= kc[others[r], i]
        if prod == 0.0:
            out[i] = 0.0
        else:
            out[i] = prod * j_scalar(kid, (wj - x[i]) / hj) / hj
    return out


def _z_terms_np(kid, x, wj, hj, frozen, kc, others):
    base = frozen.copy()
    for k in others:
        base *= kc[k]
    return base * _j_raw(kid, (wj - x) / hj) / hj


if USE_NUMBA:
    _kernel_column, _z_terms = _kernel_column_nb, _z_terms_nb
else:
    _kernel_column, _z_terms = _kernel_column_np, _z_terms_np


class _State:
    """Kernel columns restricted to candidate rows; frozen components folded into one weight."""

    def __init__(self, w, data: Dataset, weights, k: KernelProfile, h):
        self.w, self.k = w, k
        cols = data.columns
        if k.compact:
            keep = np.all(np.abs(w[:, None] - cols) <= k.support_radius * h[:, None], axis=0)
            idx = np.flatnonzero(keep)
            self.sub = np.ascontiguousarray(cols[:, idx])
            self.frozen = weights[idx].copy()
        else:
            self.sub = cols
            self.frozen = weights.copy()
        d, m = self.sub.shape
        self.kc = np.empty((d, m))
        for c in range(d):
            self.kc[c] = _kernel_column(k.kid, self.sub[c], w[c], h[c])
        self.evals = d * m

    @property
    def m(self):
        return self.sub.shape[1]

    def z(self, j, h, active, n):
        others = np.array([c for c in active if c != j], dtype=np.int64)
        terms = _z_terms(self.k.kid, self.sub[j], self.w[j], h[j], self.frozen, self.kc, others)
        self.evals += self.m
        return -pairwise_sum(terms) / (n * h[j])

    def shrink(self, j, hj):
        if self.k.compact:
            keep = np.abs(self.w[j] - self.sub[j]) <= self.k.support_radius * hj
            if not keep.all():
                self.sub = np.ascontiguousarray(self.sub[:, keep])
                self.kc = np.ascontiguousarray(self.kc[:, keep])
                self.frozen = self.frozen[keep]
        self.kc[j] = _kernel_column(self.k.kid, self.sub[j], self.w[j], hj)
        self.evals += self.m

    def freeze(self, j):
        self.frozen = self.frozen * self.kc[j]


def run_cdrodeo(w, data: Dataset, marginal, k: KernelProfile, cfg: RodeoConfig) -> RodeoResult:
    """Select a bandwidth at ``w`` by greedy shrinking and return the estimate there.

    Active components are visited in ascending order each iteration; a shrink
    is visible to the tests that follow it in the same iteration unless
    ``cfg.batch`` is set. A component is shrunk when ``|Z| >= lambda``.
    """
    n, d = data.n, data.d
    w = _check_point(w, d)
    floor = product_floor(n)
    cached = np.asarray(marginal.cached_values, dtype=np.float64)
    if cached.shape != (n,):
        raise ValueError("marginal cache does not match the dataset size")
    weights = 1.0 / cached
    h0 = cfg.resolve_h0(n)
    clam = c_lambda(k.norms, d)

    h = np.full(d, h0)
    theta = np.zeros(d, dtype=np.int64)
    active = list(range(d))
    state = _State(w, data, weights, k, h)
    trace = RodeoTrace()
    stop_reason = None
    iteration = 0

    while active and float(np.prod(h)) >= floor:
        if iteration >= cfg.max_iterations:
            stop_reason = "safety_cap"
            log.warning("safety cap of %d iterations reached", cfg.max_iterations)
            break
        record = IterationRecord(iteration=iteration, active_before=tuple(active))
        if cfg.batch:
            tested = [(j, state.z(j, h, active, n), _threshold(h[j], float(np.prod(h)), n, cfg.a, clam))
                      for j in active]
            snapshot = tuple(h.tolist())
            for j, z, lam in tested:
                _check_finite(z, j, iteration)
                decision = SHRINK if abs(z) >= lam else DEACTIVATE
                record.tests.append(TestRecord(j, snapshot, z, lam, decision))
            for t in record.tests:
                if t.decision == SHRINK:
                    h[t.j] *= cfg.beta
                    theta[t.j] += 1
                    state.shrink(t.j, h[t.j])
            for t in record.tests:
                if t.decision == DEACTIVATE:
                    active.remove(t.j)
                    state.freeze(t.j)
        else:
            for j in list(active):
                z = state.z(j, h, active, n)
                _check_finite(z, j, iteration)
                lam = _threshold(h[j], float(np.prod(h)), n, cfg.a, clam)
                snapshot = tuple(h.tolist())
                if abs(z) >= lam:
                    decision = SHRINK
                    h[j] *= cfg.beta
                    theta[j] += 1
                    state.shrink(j, h[j])
                else:
                    decision = DEACTIVATE
                    active.remove(j)
                    state.freeze(j)
                record.tests.append(TestRecord(j, snapshot, z, lam, decision))
        record.h_after = tuple(h.tolist())
        trace.iterations.append(record)
        iteration += 1

    if stop_reason is None:
        stop_reason = "all_deactivated" if not active else "product_floor"
    expected = h0 * cfg.beta ** theta.astype(np.float64)
    if not np.allclose(h, expected, rtol=1e-12, atol=0.0):
        raise AssertionError("bandwidth drifted from h0 * beta**theta")
    estimate = estimate_density(w, h, data, marginal, k)
    evals = state.evals + d * n
    return RodeoResult(
        h_final=h, theta=theta, estimate=estimate, stop_reason=stop_reason, h0=h0,
        trace=trace, kernel_evals=evals,
    )


def _check_finite(z, j, iteration):
    if not math.isfinite(z):
        raise FloatingPointError(
            f"non-finite derivative statistic for component {j} at iteration {iteration}; "
            "check the covariate density cache"
        )
