import math

import numpy as np
import pytest

from cdrodeo import (
    Dataset, RodeoConfig, get_kernel, marginal_known, product_floor, run_cdrodeo, threshold, z_statistic,
)
from cdrodeo.rodeo import DEACTIVATE, SHRINK, theory_h0
from cdrodeo.simulation import BENCH_POINT, example_rng


def test_product_floor_values():
    assert product_floor(20) == pytest.approx(math.log(20) / 20, rel=1e-15)
    assert product_floor(20) == pytest.approx(0.14979, abs=1e-5)
    assert product_floor(200_000) == pytest.approx(6.1030e-5, abs=1e-9)
    for n in (3, 10, 1000, 10**6):
        assert product_floor(2 * n) < product_floor(n)
    with pytest.raises(ValueError):
        product_floor(2)


def test_config_validation():
    with pytest.raises(ValueError):
        RodeoConfig(beta=1.0)
    with pytest.raises(ValueError):
        RodeoConfig(h0=0.0)
    assert RodeoConfig(h0=None).resolve_h0(1000) == pytest.approx(1 / math.log(1000))
    assert theory_h0(1000) == RodeoConfig(h0=None).resolve_h0(1000)


def test_empty_neighbourhood_deactivates_everything():
    rng = np.random.default_rng(0)
    samples = rng.normal(size=(500, 3))
    samples[:, 1] += 10.0
    data = Dataset(samples, 2)
    result = run_cdrodeo([0.0, 0.0, 0.0], data, marginal_known(lambda x: np.ones(len(x)), data),
                         get_kernel("biweight"), RodeoConfig(h0=0.5))
    assert result.stop_reason == "all_deactivated"
    np.testing.assert_array_equal(result.h_final, [0.5, 0.5, 0.5])
    np.testing.assert_array_equal(result.theta, [0, 0, 0])
    assert result.estimate == 0.0
    assert len(result.trace.iterations) == 1
    assert all(t.z == 0.0 and t.decision == DEACTIVATE for t in result.trace.iterations[0].tests)


def _assert_trace_invariants(result, data, marginal, k, cfg, w):
    h_prev = np.full(data.d, result.h0)
    frozen = {}
    for it in result.trace.iterations:
        assert list(it.active_before) == sorted(it.active_before)
        assert [t.j for t in it.tests] == list(it.active_before)
        for t in it.tests:
            h = np.array(t.h)
            z = z_statistic(w, h, t.j, data, marginal, k)
            lam = threshold(h, t.j, data.n, cfg.a, k.norms, data.d)
            assert z == pytest.approx(t.z, rel=1e-10, abs=1e-300)
            assert lam == t.lam
            assert t.decision == (SHRINK if abs(z) >= lam else DEACTIVATE)
        h_after = np.array(it.h_after)
        assert np.all(h_after <= h_prev)
        for j, value in frozen.items():
            assert h_after[j] == value
        for t in it.tests:
            if t.decision == DEACTIVATE:
                frozen[t.j] = h_after[t.j]
        h_prev = h_after
    np.testing.assert_array_equal(h_prev, result.h_final)


@pytest.mark.parametrize("name,h0", [("gaussian", 0.4), ("biweight", 1.0)])
def test_trace_replay_and_monotonicity(bench_data, name, h0):
    data, marginal = bench_data
    k = get_kernel(name)
    cfg = RodeoConfig(h0=h0)
    result = run_cdrodeo(BENCH_POINT, data, marginal, k, cfg)
    _assert_trace_invariants(result, data, marginal, k, cfg, np.array(BENCH_POINT))
    np.testing.assert_allclose(result.h_final, h0 * cfg.beta ** result.theta, rtol=1e-12)


def test_sequential_updates_are_visible_within_an_iteration(bench_data):
    data, marginal = bench_data
    result = run_cdrodeo(BENCH_POINT, data, marginal, get_kernel("gaussian"), RodeoConfig())
    seen = False
    for it in result.trace.iterations:
        shrunk = set()
        for t in it.tests:
            for j in shrunk:
                assert t.h[j] < it.tests[0].h[j]
                seen = True
            if t.decision == SHRINK:
                shrunk.add(t.j)
    assert seen


def test_batch_mode_tests_on_iteration_start_bandwidth(bench_data):
    data, marginal = bench_data
    k, cfg = get_kernel("gaussian"), RodeoConfig(batch=True)
    result = run_cdrodeo(BENCH_POINT, data, marginal, k, cfg)
    for it in result.trace.iterations:
        assert len({t.h for t in it.tests}) == 1
        for t in it.tests:
            z = z_statistic(BENCH_POINT, np.array(t.h), t.j, data, marginal, k)
            assert t.decision == (SHRINK if abs(z) >= t.lam else DEACTIVATE)


def test_final_product_bound_and_stop_reasons(bench_data):
    data, marginal = bench_data
    floor = product_floor(data.n)
    cfg = RodeoConfig(beta=0.7, h0=0.4, a=1.0001)
    result = run_cdrodeo(BENCH_POINT, data, marginal, get_kernel("gaussian"), cfg)
    assert np.prod(result.h_final) >= cfg.beta**data.d * floor
    if result.stop_reason == "all_deactivated":
        assert np.prod(result.h_final) >= floor


def test_product_floor_stop():
    # A sharp spike at the query point keeps every component above threshold.
    rng = np.random.default_rng(2)
    samples = np.concatenate([rng.normal(scale=1e-4, size=(3000, 2)), rng.normal(size=(30, 2))])
    data = Dataset(samples, 1)
    marginal = marginal_known(lambda x: np.ones(len(x)), data)
    result = run_cdrodeo([0.0, 0.0], data, marginal, get_kernel("gaussian"), RodeoConfig(h0=1.0, beta=0.8))
    assert result.stop_reason == "product_floor"
    assert np.prod(result.h_final) < product_floor(data.n)
    assert np.prod(result.h_final) >= 0.8**2 * product_floor(data.n)


def test_safety_cap(bench_data):
    data, marginal = bench_data
    result = run_cdrodeo(BENCH_POINT, data, marginal, get_kernel("gaussian"), RodeoConfig(max_iterations=2))
    assert result.stop_reason == "safety_cap"
    assert len(result.trace.iterations) == 2


def test_shrink_count_bound(bench_data):
    data, marginal = bench_data
    cfg = RodeoConfig(beta=0.9, h0=0.6)
    result = run_cdrodeo(BENCH_POINT, data, marginal, get_kernel("gaussian"), cfg)
    n, d = data.n, data.d
    bound = d * math.log(n * cfg.h0**d / math.log(n)) / math.log(1 / cfg.beta) + d
    assert result.theta.sum() <= bound


def test_non_finite_cache_aborts(bench_data):
    data, _ = bench_data
    bad = type("M", (), {"cached_values": np.where(np.arange(data.n) == 0, 0.0, 1.0)})()
    samples = data.samples.copy()
    samples[0] = BENCH_POINT
    data = Dataset(samples, data.d1)
    with pytest.raises(FloatingPointError), np.errstate(divide="ignore", invalid="ignore"):
        run_cdrodeo(BENCH_POINT, data, bad, get_kernel("gaussian"), RodeoConfig())


def test_needs_three_observations():
    data = Dataset(np.zeros((2, 2)), 1)
    with pytest.raises(ValueError):
        run_cdrodeo([0, 0], data, marginal_known(lambda x: np.ones(len(x)), data), get_kernel("gaussian"),
                    RodeoConfig())


def test_determinism(bench_data):
    data, marginal = bench_data
    runs = [run_cdrodeo(BENCH_POINT, data, marginal, get_kernel("gaussian"), RodeoConfig()) for _ in range(2)]
    assert runs[0].to_dict() == runs[1].to_dict()
    assert list(runs[0].trace.rows()) == list(runs[1].trace.rows())


def test_result_estimate_matches_fixed_bandwidth(bench_data):
    from cdrodeo import estimate_density

    data, marginal = bench_data
    k = get_kernel("gaussian")
    result = run_cdrodeo(BENCH_POINT, data, marginal, k, RodeoConfig())
    assert result.estimate == estimate_density(BENCH_POINT, result.h_final, data, marginal, k)
    assert set(result.to_dict()) == {"h_final", "theta", "estimate", "stop_reason"}


def test_unconditional_bandwidth_rate():
    # Standard normal at 0, d1 = 0: selected h ~ n^(-1/5) up to log factors, 10^(-1/5) = 0.631.
    # h0 = 1 sits above the selected bandwidth at both sample sizes.
    k, cfg = get_kernel("gaussian"), RodeoConfig(h0=1.0)
    medians = {}
    for n in (10**4, 10**5):
        hs = []
        for seed in range(10):
            data = Dataset(example_rng(seed, n).standard_normal((n, 1)), 0)
            hs.append(run_cdrodeo([0.0], data, marginal_known(None, data), k, cfg).h_final[0])
        medians[n] = np.median(hs)
    assert 0.5 <= medians[10**5] / medians[10**4] <= 0.75
