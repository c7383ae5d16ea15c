import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from samopt import RidgeSpec, LogisticSpec, gen_logistic, gen_ridge, ridge_from_data, stream


@pytest.fixture(scope="session")
def small_ridge():
    return gen_ridge(RidgeSpec(n=24, d=6, cond=4.0, lambda_r=0.1, seed=2))


@pytest.fixture(scope="session")
def plain_ridge():
    # unregularized, square, full rank: interpolation holds, f* = 0
    return gen_ridge(RidgeSpec(n=12, d=12, cond=5.0, lambda_r=0.0, seed=7))


@pytest.fixture(scope="session")
def interp_ridge():
    rng = stream(31)
    A = rng.standard_normal((15, 4))
    x_bar = rng.standard_normal(4)
    return ridge_from_data(A, A @ x_bar, 0.0)


@pytest.fixture(scope="session")
def small_logistic():
    return gen_logistic(LogisticSpec(n=20, d=5, cond=3.0, lambda_r=0.05, seed=4))


@pytest.fixture(scope="session")
def hetero_ridge():
    # spread row norms: the instance where importance sampling matters
    return gen_ridge(RidgeSpec(n=40, d=10, cond=10.0, lambda_r=0.03, seed=9, spectrum="uniform", s_max=10.0))
