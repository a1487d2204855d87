import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qextrap.qcore import haar_state, random_density
from qextrap.rng import stream

settings.register_profile(
    "qextrap",
    deadline=None,
    max_examples=60,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qextrap")

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.sampled_from([2, 3, 4, 5, 8])


def density_pair(seed: int, dim: int, rank=None):
    rng = stream(seed)
    return random_density(dim, rng, rank).mat, random_density(dim, rng, rank).mat


def pure_pair(seed: int, dim: int):
    rng = stream(seed)
    return haar_state(dim, rng).density().mat, haar_state(dim, rng).density().mat


@pytest.fixture
def rng():
    return stream(12345)


def basis_projector(dim: int, i: int) -> np.ndarray:
    e = np.zeros(dim, dtype=complex)
    e[i] = 1
    return np.outer(e, e)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
