import numpy as np
import pytest

from fastmu.config import Algorithm, SolverConfig
from fastmu.contracts import SyntheticSpec
from fastmu.matrix import make_rng
from fastmu.synthetic import generate

FROBENIUS_ROSTER = ["mu", "hals", "gd", "nenmf", "fastmu", "fastmu_ex"]
KL_ROSTER = [("mu", "exact"), ("fastmu", "exact"), ("fastmu", "approx")]


def solver_config(kind="fastmu", loss="frobenius", hessian_mode="exact", **overrides) -> SolverConfig:
    return SolverConfig(algorithm=Algorithm(kind, loss, hessian_mode), **overrides)


@pytest.fixture
def rng():
    return make_rng(1234, stream=7)


@pytest.fixture
def positive_factors(rng):
    """R=3 factors for a 12×9 problem, entries in [0.1, 1.1)."""
    W = rng.random((3, 12)) + 0.1
    H = rng.random((3, 9)) + 0.1
    return W, H


@pytest.fixture
def small_problem():
    return generate(SyntheticSpec(M=30, N=20, R=3, snr_db=100.0, seed=3).validate())


@pytest.fixture
def noise_free_problem():
    return generate(SyntheticSpec(M=30, N=20, R=3, snr_db=np.inf, seed=5).validate())
