import numpy as np
import pytest

from rqumf.qubo import QuboParams


def random_coverage_instance(rng, max_vars=22, lambda2_min=1.0):
    """Random preference matrix + weights with n + m <= max_vars."""
    n = int(rng.integers(3, max(4, max_vars - 3)))
    m = int(rng.integers(2, max(3, min(max_vars - n, 14)) + 1))
    p = (rng.random((n, m)) < float(rng.uniform(0.2, 0.5))).astype(np.uint8)
    params = QuboParams(
        lambda1=float(rng.uniform(0.1, 3.0)),
        lambda2=float(rng.uniform(lambda2_min, lambda2_min + 2.0)),
    )
    return p, params


def all_assignments(d):
    """All binary vectors of length d as a (2^d, d) array."""
    ints = np.arange(1 << d, dtype=np.uint64)
    shifts = np.arange(d, dtype=np.uint64)
    return ((ints[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.uint8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
