import numpy as np
import pytest

from anomalycd import FlagMatrix


def make_flags(matrix, channels=None) -> FlagMatrix:
    """FlagMatrix over integer timestamps from a (T, N) 0/1 array."""
    matrix = np.asarray(matrix, dtype=np.uint8)
    if channels is None:
        channels = tuple(f"C{i}" for i in range(matrix.shape[1]))
    return FlagMatrix(np.arange(matrix.shape[0], dtype=float), channels, matrix)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
