import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report(capsys):
    """Print a line past pytest's output capture."""

    def emit(line):
        with capsys.disabled():
            print(line)

    return emit
