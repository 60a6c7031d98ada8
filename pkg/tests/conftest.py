import itertools
import math

import numpy as np
import pytest

from arbq import kernels
from arbq.market import RateTable, fixture


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def table4():
    return fixture("table4")


@pytest.fixture(scope="session")
def table5():
    return fixture("table5")


@pytest.fixture(scope="session")
def table6():
    return fixture("table6")


@pytest.fixture(scope="session")
def table3(table4):
    """3-currency instance cut from the 4-currency table (6 edge variables)."""
    return table4.subset(["EUR", "USD", "JPY"])


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    if request.param == "numba" and not kernels.numba_available:
        pytest.skip("numba not importable")
    return kernels.get_backend(request.param)


def all_bits(q):
    """Every assignment of q bits as rows of a 0/1 array; row k has bit v = (k >> v) & 1."""
    k = np.arange(1 << q)
    return ((k[:, None] >> np.arange(q)) & 1).astype(np.int64)


def brute_cycle_profits(table):
    """Map of every simple cycle (as a node tuple starting at its smallest node) to its rate product."""
    n = table.n
    out = {}
    for k in range(2, n + 1):
        for comb in itertools.combinations(range(n), k):
            for perm in itertools.permutations(comb[1:]):
                c = (comb[0],) + perm
                out[c] = math.prod(table.rates[c[t], c[(t + 1) % k]] for t in range(k))
    return out


def random_table(rng, n, sigma=0.003):
    """Log-price table with multiplicative noise; rates stay within [0.005, 200]."""
    prices = rng.uniform(np.log(0.07), np.log(14.0), n)
    logs = prices[None, :] - prices[:, None] + rng.normal(0.0, sigma, (n, n))
    np.fill_diagonal(logs, 0.0)
    rates = np.clip(np.exp(logs), 0.005, 200.0)
    np.fill_diagonal(rates, 1.0)
    codes = tuple(f"C{i}" for i in range(n))
    return RateTable(codes, rates)
