import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_scores(rng, n_max=64, n_min=2, lo=-50.0, hi=50.0):
    n = int(rng.integers(n_min, n_max + 1))
    return rng.uniform(lo, hi, n)
