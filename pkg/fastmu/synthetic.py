"""
Synthetic NMF/NLS problems: uniform low-rank factors, optional sparsification,
and additive uniform noise calibrated to a target SNR on each realization.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from fastmu.contracts import SyntheticProblem, SyntheticSpec
from fastmu.errors import ConfigurationError
from fastmu.logger import get_logger
from fastmu.matrix import DenseMatrix, frobenius_norm, make_rng, save_csv, uniform_matrix

logger = get_logger(__name__)

DATA_STREAM = 0


def sparsify(X: DenseMatrix, fraction: float, floor: float) -> DenseMatrix:
    """Replace the ⌈fraction·size⌉ smallest entries by floor; ties go to the lower linear index."""
    if not 0.0 <= fraction < 1.0:
        raise ConfigurationError(f"fraction must lie in [0, 1), got {fraction}")
    # round first so that e.g. 0.1 * 30 counts 3 entries, not 4
    count = math.ceil(round(fraction * X.size, 9))
    out = np.array(X, dtype=np.float64, copy=True)
    if count == 0:
        return out
    order = np.argsort(out, axis=None, kind="stable")
    flat = out.reshape(-1)
    flat[order[:count]] = floor
    return out


def _draw(spec: SyntheticSpec) -> Tuple[DenseMatrix, DenseMatrix, DenseMatrix]:
    rng = make_rng(spec.seed, stream=DATA_STREAM)
    W = uniform_matrix(rng, spec.R, spec.M)
    H = uniform_matrix(rng, spec.R, spec.N)
    E = uniform_matrix(rng, spec.M, spec.N)
    return W, H, E


def _signal(spec: SyntheticSpec, W: DenseMatrix, H: DenseMatrix) -> Tuple[DenseMatrix, DenseMatrix, DenseMatrix]:
    if spec.setup.sparse_factors:
        W = sparsify(W, spec.sparsify_fraction, spec.eps_fac)
        H = sparsify(H, spec.sparsify_fraction, spec.eps_fac)
    signal = W.T @ H
    if spec.setup.sparse_data:
        signal = sparsify(signal, spec.sparsify_fraction, spec.data_floor)
    return W, H, signal


def noise_sigma(signal: DenseMatrix, noise: DenseMatrix, snr_db: float) -> float:
    """σ such that 10·log10(‖signal‖²/‖σE‖²) equals snr_db exactly."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    noise_norm = frobenius_norm(noise)
    if noise_norm == 0.0:
        raise ConfigurationError("noise realization is identically zero")
    scale = noise_norm * 10.0 ** (snr_db / 20.0)
    if scale == 0.0:
        raise ConfigurationError(f"snr_db = {snr_db} is too low to calibrate the noise")
    return frobenius_norm(signal) / scale


def generate(spec: SyntheticSpec) -> SyntheticProblem:
    spec.validate()
    W, H, E = _draw(spec)
    W, H, signal = _signal(spec, W, H)
    sigma = noise_sigma(signal, E, spec.snr_db)
    # noise goes on after sparsification
    V = signal + sigma * E if sigma > 0.0 else signal
    logger.debug("generated %s problem %dx%d rank %d, sigma=%.3e", spec.setup.value, spec.M, spec.N, spec.R, sigma)
    return SyntheticProblem(V=V, W_true=W, H_true=H, sigma=sigma, spec=spec)


def noise_matrix(spec: SyntheticSpec) -> DenseMatrix:
    """The unscaled noise E of a spec's realization (replays the generator stream)."""
    return _draw(spec)[2]


def realized_snr_db(problem: SyntheticProblem) -> float:
    noise = problem.sigma * noise_matrix(problem.spec)
    noise_energy = frobenius_norm(noise) ** 2
    if noise_energy == 0.0:
        return math.inf
    signal_energy = frobenius_norm(problem.V - noise) ** 2
    return 10.0 * math.log10(signal_energy / noise_energy)


def problem_to_csv(problem: SyntheticProblem, directory: str | Path) -> Dict[str, Path]:
    directory = Path(directory)
    return {
        "V": save_csv(problem.V, directory / "V.csv"),
        "W_true": save_csv(problem.W_true, directory / "W_true.csv"),
        "H_true": save_csv(problem.H_true, directory / "H_true.csv"),
    }
