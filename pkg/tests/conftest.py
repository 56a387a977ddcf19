import numpy as np
import pytest

from srcond.expr import get_function_set
from srcond.gp import random_tree


def make_tree(seed, function_set="small", max_size=15, n_vars=2):
    """A random tree with at least one parameter."""
    for attempt in range(100):
        rng = np.random.default_rng([seed, attempt])
        tree = random_tree(max_size, get_function_set(function_set), n_vars, rng)
        if tree.k > 0:
            return tree, rng
    raise RuntimeError("no parameterised tree")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
