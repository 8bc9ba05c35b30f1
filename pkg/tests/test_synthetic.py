import math

import numpy as np
import pytest

from fastmu.contracts import SparsitySetup, SyntheticSpec
from fastmu.errors import ConfigurationError
from fastmu.matrix import frobenius_norm, load_csv
from fastmu.synthetic import generate, noise_matrix, problem_to_csv, realized_snr_db, sparsify


def test_sparsify_examples():
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(sparsify(X, 0.0, 0.0), X)
    np.testing.assert_array_equal(sparsify(X, 0.5, 0.0), [[0.0, 0.0], [3.0, 4.0]])
    np.testing.assert_array_equal(X, [[1.0, 2.0], [3.0, 4.0]])


def test_sparsify_ties_go_to_lower_index():
    out = sparsify(np.array([[5.0, 1.0, 1.0, 1.0]]), 0.5, -1.0)
    np.testing.assert_array_equal(out, [[5.0, -1.0, -1.0, 1.0]])


def test_sparsify_rejects_bad_fraction():
    with pytest.raises(ConfigurationError):
        sparsify(np.ones((2, 2)), 1.0, 0.0)


def test_generation_is_deterministic():
    spec = SyntheticSpec(M=15, N=10, R=2, seed=7)
    a, b = generate(spec), generate(spec)
    np.testing.assert_array_equal(a.V, b.V)
    np.testing.assert_array_equal(a.W_true, b.W_true)
    assert not np.array_equal(a.V, generate(SyntheticSpec(M=15, N=10, R=2, seed=8)).V)


def test_noise_free_data_is_exactly_low_rank():
    problem = generate(SyntheticSpec(M=15, N=10, R=2, snr_db=math.inf))
    assert problem.sigma == 0.0
    np.testing.assert_array_equal(problem.V, problem.W_true.T @ problem.H_true)
    assert np.linalg.matrix_rank(problem.V) == 2
    assert realized_snr_db(problem) == math.inf


@pytest.mark.parametrize("snr_db", [0.0, 30.0, 100.0])
def test_noise_is_calibrated_to_the_target_snr(snr_db):
    problem = generate(SyntheticSpec(M=20, N=12, R=3, snr_db=snr_db, seed=1))
    signal = problem.W_true.T @ problem.H_true
    noise = problem.sigma * noise_matrix(problem.spec)
    ratio = frobenius_norm(signal) / frobenius_norm(noise)
    assert 20.0 * math.log10(ratio) == pytest.approx(snr_db, abs=1e-9)
    assert realized_snr_db(problem) == pytest.approx(snr_db, abs=1e-6)


def test_zero_db_noise_energy_equals_signal_energy():
    problem = generate(SyntheticSpec(M=20, N=12, R=3, snr_db=0.0, seed=2))
    signal = problem.W_true.T @ problem.H_true
    noise = problem.sigma * noise_matrix(problem.spec)
    assert frobenius_norm(noise) == pytest.approx(frobenius_norm(signal), rel=1e-10)


def test_data_sparse_floors_half_the_entries():
    spec = SyntheticSpec(M=7, N=5, R=2, snr_db=math.inf, setup="data_sparse", eps_data=1e-9)
    problem = generate(spec)
    assert np.count_nonzero(problem.V == 1e-9) == math.ceil(7 * 5 / 2)


def test_fac_sparse_floors_the_factors():
    spec = SyntheticSpec(M=10, N=6, R=2, snr_db=math.inf, setup=SparsitySetup.FAC_SPARSE, eps_fac=1e-8)
    problem = generate(spec)
    assert np.count_nonzero(problem.W_true == 1e-8) == 10
    assert np.count_nonzero(problem.H_true == 1e-8) == 6
    assert spec.data_floor == pytest.approx(2 * 1e-16)


def test_fac_data_sparse_sparsifies_data_built_from_sparse_factors():
    spec = SyntheticSpec(M=10, N=6, R=2, snr_db=math.inf, setup="fac_data_sparse")
    problem = generate(spec)
    assert np.count_nonzero(problem.W_true == spec.eps_fac) == 10
    assert np.count_nonzero(problem.V == spec.data_floor) >= 30


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(M=5, N=4, R=5),
        dict(M=0, N=4, R=1),
        dict(M=5, N=4, R=2, sparsify_fraction=1.0),
        dict(M=5, N=4, R=2, eps_fac=-1.0),
        dict(M=5, N=4, R=2, setup="mostly_sparse"),
        dict(M=5, N=4, R=2, snr_db=-math.inf),
        dict(M=5, N=4, R=2, snr_db=-8000.0),
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(ConfigurationError):
        generate(SyntheticSpec(**kwargs))


def test_problem_to_csv(tmp_path):
    problem = generate(SyntheticSpec(M=6, N=4, R=2, seed=3))
    paths = problem_to_csv(problem, tmp_path)
    assert sorted(p.name for p in paths.values()) == ["H_true.csv", "V.csv", "W_true.csv"]
    np.testing.assert_array_equal(load_csv(paths["V"]), problem.V)
