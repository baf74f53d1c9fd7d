import os

import numpy as np
import pytest
import scipy.sparse as sp

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture
def fixture_path():
    return os.path.join(DATA_DIR, "fixture.jsonl")


def random_symmetric(rng, n, density=0.4, scale=1.0):
    """Random symmetric nonnegative matrix with zero diagonal."""
    dense = rng.random((n, n)) * scale
    dense[rng.random((n, n)) > density] = 0.0
    dense = np.triu(dense, 1)
    return sp.csr_matrix(dense + dense.T)
