"""Greedy per-point bandwidth selection for kernel conditional density estimation."""

__version__ = "0.1.0"

from ._accel import BACKEND
from .estimator import Dataset, estimate_density, threshold, z_statistic
from .kernels import KernelNorms, KernelProfile, get_kernel, j_eval
from .marginal import MarginalConfig, MarginalModel, fit_marginal_kde, marginal_at, marginal_known
from .rodeo import RodeoConfig, RodeoResult, product_floor, run_cdrodeo

__all__ = [
    "BACKEND",
    "Dataset",
    "KernelNorms",
    "KernelProfile",
    "MarginalConfig",
    "MarginalModel",
    "RodeoConfig",
    "RodeoResult",
    "estimate_density",
    "fit_marginal_kde",
    "get_kernel",
    "j_eval",
    "marginal_at",
    "marginal_known",
    "product_floor",
    "run_cdrodeo",
    "threshold",
    "z_statistic",
]
