import numpy as np
import pytest

from realizability.core import CorrelationSpec, FiniteMeasure, LatticeDomain, PairFunction


@pytest.fixture
def two_site_measure():
    return FiniteMeasure(LatticeDomain.segment(2), [0.62, 0.18, 0.18, 0.02])


@pytest.fixture
def two_site_spec():
    return CorrelationSpec(LatticeDomain.segment(2), 0.2, PairFunction.translation_invariant({1: 0.5}))


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def brute_correlation(weights, n, sites):
    """P(all listed sites occupied) by a plain loop over configurations."""
    total = 0.0
    for mask in range(1 << n):
        if all(mask >> s & 1 for s in sites):
            total += weights[mask]
    return total


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def report(request):
    """Record one ``criterion N: PASS|FAIL`` line, shown in the terminal summary."""
    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.stash[ACCEPTANCE].append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
