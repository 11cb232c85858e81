import zlib

import numpy as np
import pytest

from slkl.kernel import ColumnSource, Dataset, KernelSpec
from slkl.lowrank import state_from_weights


def random_problem(rng, n=10, M=6, d=2, sigma2=1.0, spread=2.0):
    """Random points, targets and M candidate columns (positions 0..M-1)."""
    X = rng.uniform(-spread, spread, size=(n, d))
    y = np.sin(X[:, 0]) + 0.1 * rng.normal(size=n)
    data = Dataset(X, y)
    spec = KernelSpec(sigma2)
    S = np.sort(rng.choice(n, size=M, replace=False))
    return data, spec, ColumnSource(spec, data, S)


def random_state(rng, columns, lam, density=0.6):
    """State keyed by candidate position with random positive weights."""
    mu = np.where(rng.random(columns.M) < density, rng.uniform(0.05, 3.0, columns.M), 0.0)
    state = state_from_weights(lam, {j: mu[j] for j in range(columns.M)}, columns.column)
    return state, mu


@pytest.fixture
def rng(request):
    # stable per-test seed
    return np.random.default_rng(zlib.crc32(request.node.name.encode()))


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = {}


def record_criterion(number, title, ok, detail):
    ACCEPTANCE[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        status = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
        terminalreporter.write_line(f"criterion {number:>2} {status}  {title}: {detail}")
