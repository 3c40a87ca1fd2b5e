import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from cdrodeo.kernels import (
    KERNEL_NAMES,
    get_kernel,
    j_eval,
    make_biweight_kernel,
    make_gaussian_kernel,
)

SQRT_PI = math.sqrt(math.pi)


@pytest.fixture(params=KERNEL_NAMES)
def kernel(request):
    return get_kernel(request.param)


def test_gaussian_values():
    k = make_gaussian_kernel()
    assert k.order == 2
    assert not k.compact
    assert float(k.eval(0.0)) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-12)
    assert float(k.eval(0.0)) == pytest.approx(0.3989422804, abs=1e-10)
    assert k.norms.moments_k[1] == pytest.approx(0.0, abs=1e-12)
    assert float(j_eval(k, 1.0)) == pytest.approx(0.0, abs=1e-15)
    assert float(j_eval(k, 0.0)) == pytest.approx(0.3989422804, abs=1e-10)


def test_gaussian_norms_match_closed_forms():
    norms = make_gaussian_kernel().norms
    assert norms.k_l2**2 == pytest.approx(1 / (2 * SQRT_PI), abs=1e-10)
    assert norms.k_l2**2 == pytest.approx(0.2820947918, abs=1e-10)
    assert norms.j_l2**2 == pytest.approx(3 / (8 * SQRT_PI), abs=1e-10)
    assert norms.j_l2**2 == pytest.approx(0.2115710938, abs=1e-10)
    assert norms.moments_j[2] == pytest.approx(-2.0, abs=1e-8)
    assert norms.k_sup == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-12)


def test_biweight_values():
    k = make_biweight_kernel()
    assert (k.order, k.support_radius) == (2, 1.0)
    assert float(k.eval(1.5)) == 0.0
    assert float(k.eval(0.0)) == 0.9375
    assert k.norms.moments_k[2] == pytest.approx(1 / 7, abs=1e-12)
    # C^1 at the support edge
    assert float(k.deriv(1.0)) == 0.0 and float(k.deriv(-1.0)) == 0.0
    assert float(k.eval(0.5)) == 0.52734375
    assert float(k.deriv(0.5)) == -1.40625
    assert float(j_eval(k, 0.5)) == pytest.approx(-0.17578125, abs=1e-15)


def test_biweight_j_matches_finite_difference():
    k = make_biweight_kernel()
    step = 1e-6
    fd = (k.eval(0.5 + step) - k.eval(0.5 - step)) / (2 * step)
    assert float(k.eval(0.5) + 0.5 * fd) == pytest.approx(-0.17578125, abs=1e-9)


def test_order(kernel):
    m = kernel.norms.moments_k
    for l in range(1, kernel.order):
        assert abs(m[l]) <= 1e-8
    assert abs(m[kernel.order]) > 1e-8


def test_normalisation_and_moment_identity(kernel):
    norms = kernel.norms
    assert norms.moments_k[0] == pytest.approx(1.0, abs=1e-10)
    assert norms.moments_j[0] == pytest.approx(0.0, abs=1e-10)
    for l in range(len(norms.moments_k)):
        assert abs(norms.moments_j[l] + l * norms.moments_k[l]) <= 1e-8


def test_norms_positive(kernel):
    n = kernel.norms
    assert min(n.k_l1, n.k_l2, n.k_sup, n.j_l1, n.j_l2, n.j_sup) > 0


def test_norms_against_independent_quadrature(kernel):
    r = kernel.quadrature_radius
    l2, _ = integrate.quad(lambda t: float(kernel.eval(t)) ** 2, -r, r, epsabs=1e-12, limit=200)
    jl2, _ = integrate.quad(lambda t: float(kernel.j(t)) ** 2, -r, r, epsabs=1e-12, limit=200)
    assert kernel.norms.k_l2 == pytest.approx(math.sqrt(l2), rel=1e-9)
    assert kernel.norms.j_l2 == pytest.approx(math.sqrt(jl2), rel=1e-9)
    grid = np.linspace(-r, r, 200_001)
    assert kernel.norms.k_sup == pytest.approx(np.max(np.abs(kernel.eval(grid))), rel=1e-6)
    assert kernel.norms.j_sup == pytest.approx(np.max(np.abs(kernel.j(grid))), rel=1e-6)


def test_derivative_consistency(kernel):
    r = kernel.quadrature_radius
    # K'' jumps at +-R for the compact kernels, so the central difference
    # straddling the edge is only O(step) accurate there: keep to the interior.
    grid = np.linspace(-r, r, 1003)[1:-1]
    step = 1e-5
    fd = (kernel.eval(grid + step) - kernel.eval(grid - step)) / (2 * step)
    assert np.max(np.abs(kernel.deriv(grid) - fd)) <= 1e-6


@pytest.mark.parametrize("name", ["biweight", "biweight4"])
@given(t=st.floats(min_value=1.0, max_value=1e6, exclude_min=True))
@settings(max_examples=200)
def test_compact_support_exact_zero(name, t):
    k = get_kernel(name)
    for s in (t, -t):
        assert float(k.eval(s)) == 0.0
        assert float(j_eval(k, s)) == 0.0


def test_profiles_are_cached_and_immutable():
    k = get_kernel("gaussian")
    assert get_kernel("GAUSSIAN") is k
    with pytest.raises(AttributeError):
        k.order = 4


def test_unknown_kernel():
    with pytest.raises(ValueError, match="unknown kernel"):
        get_kernel("epanechnikov")
