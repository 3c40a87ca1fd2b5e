"""The five-dimensional benchmark: X1 ~ U[-1, 1], X2..X4 ~ N(0, 1), Y | X2 ~ Exp(mean X2^2).

Every dataset is drawn from a Philox stream keyed by ``(seed, stream)``;
replication ``r`` of a report uses stream ``r``, so runs are independent
and reproducible across machines.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimator import Dataset
from .kernels import KernelProfile
from .marginal import marginal_known
from .rodeo import RodeoConfig, RodeoResult, run_cdrodeo

__all__ = [
    "BENCH_POINT",
    "ExampleSpec",
    "ReplicationReport",
    "example_rng",
    "replicate_runs",
    "sample_example",
    "slice_curves",
    "true_f",
    "true_marginal",
]

BENCH_POINT = (0.0, 1.0, 0.0, 0.0, 1.0)
D1, D = 4, 5
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class ExampleSpec:
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")


def example_rng(seed: int, stream: int = 0) -> np.random.Generator:
    key = np.array([seed & _U64, stream & _U64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_example(spec: ExampleSpec, stream: int = 0) -> Dataset:
    rng = example_rng(spec.seed, stream)
    n = spec.n
    x1 = rng.uniform(-1.0, 1.0, n)
    x234 = rng.standard_normal((3, n))
    y = rng.exponential(x234[0] ** 2)
    return Dataset(np.column_stack([x1, x234[0], x234[1], x234[2], y]), D1)


def true_f(w) -> float:
    """1[-1,1](x1) x2^-2 exp(-y / x2^2), zero for y < 0."""
    w = np.asarray(w, dtype=np.float64)
    x1, x2, y = w[0], w[1], w[4]
    if x2 == 0:
        raise ValueError("the conditional density is degenerate at x2 = 0")
    if abs(x1) > 1 or y < 0:
        return 0.0
    s = x2 * x2
    return math.exp(-y / s) / s


def true_marginal(x):
    """Covariate density (1/2) 1[-1,1](x1) phi(x2) phi(x3) phi(x4); accepts (4,) or (m, 4)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    gauss = np.exp(-0.5 * np.sum(x[:, 1:4] ** 2, axis=1)) * _INV_SQRT_2PI**3
    out = 0.5 * (np.abs(x[:, 0]) <= 1.0) * gauss
    return float(out[0]) if single else out


@dataclass
class ReplicationReport:
    bandwidths: np.ndarray  # (m, d)
    thetas: np.ndarray  # (m, d)
    estimates: np.ndarray  # (m,)
    stop_reasons: list
    wall_clock: np.ndarray  # seconds per run
    h0: float

    @property
    def m(self) -> int:
        return self.bandwidths.shape[0]

    def quantiles(self, qs=(0.0, 0.25, 0.5, 0.75, 1.0)) -> dict:
        return {float(q): np.quantile(self.bandwidths, q, axis=0).tolist() for q in qs}

    def fraction_deactivated_first(self, components) -> float:
        """Share of runs in which every listed (0-based) component has theta = 0."""
        return float(np.mean(np.all(self.thetas[:, list(components)] == 0, axis=1)))


def _one_run(spec, cfg, w, kernel, stream):
    t0 = time.perf_counter()
    data = sample_example(spec, stream)
    marginal = marginal_known(true_marginal, data)
    result = run_cdrodeo(w, data, marginal, kernel, cfg)
    return result, time.perf_counter() - t0


def _n_threads():
    return max(1, int(os.environ.get("CDRODEO_THREADS", "1")))


def replicate_runs(
    m: int, spec: ExampleSpec, cfg: RodeoConfig, kernel: KernelProfile, w=BENCH_POINT,
    threads: int | None = None,
) -> ReplicationReport:
    """``m`` independent datasets and one selection each; results are merged in run order."""
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    threads = threads or _n_threads()
    if threads == 1:
        runs = [_one_run(spec, cfg, w, kernel, r) for r in range(m)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(lambda r: _one_run(spec, cfg, w, kernel, r), range(m)))
    results: list[RodeoResult] = [r for r, _ in runs]
    return ReplicationReport(
        bandwidths=np.array([r.h_final for r in results]),
        thetas=np.array([r.theta for r in results]),
        estimates=np.array([r.estimate for r in results]),
        stop_reasons=[r.stop_reason for r in results],
        wall_clock=np.array([t for _, t in runs]),
        h0=results[0].h0,
    )


def slice_curves(
    spec: ExampleSpec, cfg: RodeoConfig, kernel: KernelProfile, base_point, axis: int, grid,
) -> list[tuple[float, float, float]]:
    """Estimate along one (0-based) axis on a single shared dataset.

    Returns ``(coordinate, estimate, truth)`` rows; ``truth`` is NaN where x2 = 0.
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError("grid must be non-empty")
    if not 0 <= axis < D:
        raise IndexError(f"axis {axis} out of range for d={D}")
    data = sample_example(spec)
    marginal = marginal_known(true_marginal, data)
    rows = []
    for v in grid:
        point = np.array(base_point, dtype=np.float64)
        point[axis] = v
        est = run_cdrodeo(point, data, marginal, kernel, cfg).estimate
        truth = math.nan if point[1] == 0 else true_f(point)
        rows.append((v, est, truth))
    return rows
