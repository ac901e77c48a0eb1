import numpy as np
import pytest

from mmisq import ctmc
from mmisq.model import ModelSpec, example_model

_ACCEPTANCE_LINES = []


@pytest.fixture
def two_state():
    return example_model()


@pytest.fixture
def one_state():
    return ModelSpec(ctmc.validate_generator([[0.0]]), np.array([1.0]), mu=1.0, rho0=0.0)


def random_generator(rng, d, sparse=False):
    """Irreducible generator: a directed cycle plus random extra edges."""
    q = np.zeros((d, d))
    if sparse:
        for i in range(d):
            q[i, (i + 1) % d] = rng.uniform(0.1, 5.0)
        extra = rng.random((d, d)) < 0.3
        q[extra] = rng.uniform(0.1, 5.0, size=extra.sum())
    else:
        q = rng.uniform(0.05, 5.0, size=(d, d))
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -q.sum(axis=1))
    return ctmc.validate_generator(q)


@pytest.fixture
def acceptance_line():
    def record(number, passed, text):
        _ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {text}")
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
