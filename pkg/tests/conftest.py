import numpy as np
import pytest

from mixedlr.data import random_truth, sample_instance


def make_instance(d=10, n=200, K=2, sigma=0.0, seed=0):
    truth = random_truth(K, d, seed, sigma=sigma)
    return truth, sample_instance(truth, n, seed)


@pytest.fixture
def small_problem():
    return make_instance(d=10, n=200, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
