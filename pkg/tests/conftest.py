import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_pd_matrix(rng, n, jitter=0.1):
    """Random symmetric positive definite matrix."""
    a = rng.normal(size=(n, n))
    return a @ a.T + jitter * np.eye(n)
