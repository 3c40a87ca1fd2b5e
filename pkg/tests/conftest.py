import math

import numpy as np
import pytest

from cdrodeo import Dataset, marginal_known
from cdrodeo.simulation import ExampleSpec, sample_example, true_marginal

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record an acceptance verdict; all verdicts are listed at the end of the run."""

    def record(number, passed, detail):
        _CRITERIA[number] = (bool(passed), detail)
        assert passed, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {detail}")


def reference_estimate(w, h, samples, fx, kernel, jcol=None):
    """Scalar double loop over observations and coordinates."""
    n, d = samples.shape
    total = 0.0
    for i in range(n):
        prod = 1.0 / fx[i]
        for k in range(d):
            t = (w[k] - samples[i, k]) / h[k]
            value = float(kernel.j(t)) if k == jcol else float(kernel.eval(t))
            prod *= value / h[k]
        total += prod
    if jcol is None:
        return total / n
    return -total / (n * h[jcol])


@pytest.fixture(scope="session")
def bench_data():
    data = sample_example(ExampleSpec(n=20_000, seed=11))
    return data, marginal_known(true_marginal, data)


@pytest.fixture
def unit_marginal():
    def make(data):
        return marginal_known(None, data) if data.d1 == 0 else marginal_known(
            lambda x: np.ones(len(x)), data
        )

    return make


E_INV = math.exp(-1.0)
