import numpy as np
import pytest

from proxlr import Observation, SensingOperator, make_instance


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_instance():
    return make_instance(8, 6, 2, 0.9, 0.1, seed=3)


@pytest.fixture
def exact_instance():
    """Noiseless, outlier-free instance with a planted rank-2 matrix."""
    return make_instance(8, 6, 2, 0.9, 0.0, noise_var=0.0, seed=5)


@pytest.fixture
def selection_obs(rng):
    """Observation whose operator picks every entry of a 3x2 matrix."""
    mats = np.eye(6).reshape(6, 3, 2)
    return Observation(rng.standard_normal(6), SensingOperator(mats))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
