"""
Diagonal majorant metrics.

Every metric column is diag((B u) ⊘ u) for the column's Hessian (or a Hessian
majorant) B and a positive vector u. The classical MU metrics take u = x, the
fastMU metrics take the u that minimizes ‖b ⊘ u‖₁ on ‖Wᵀu‖₁ = ‖v‖₁.

All functions are written for the H block (X is R×N, V is M×N); the W block
is handled by calling them on (Vᵀ, H, W).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.linalg import eigvalsh

from fastmu.config import Algorithm, AlgorithmKind, HessianMode, LossKind
from fastmu.errors import DimensionError, DomainError
from fastmu.matrix import DenseMatrix

PSD_TOL = 1e-10
SYMMETRY_TOL = 1e-12
DEFAULT_EPS_U = 1e-16


class MajorantKind(str, Enum):
    MU_FRO = "mu_fro"
    MU_KL = "mu_kl"
    FASTMU_FRO = "fastmu_fro"
    FASTMU_KL_EXACT = "fastmu_kl_exact"
    FASTMU_KL_APPROX = "fastmu_kl_approx"

    @property
    def loss(self) -> LossKind:
        if self in (MajorantKind.MU_FRO, MajorantKind.FASTMU_FRO):
            return LossKind.FROBENIUS
        return LossKind.KL


def metric_for(algorithm: Algorithm) -> Optional[MajorantKind]:
    """Metric driving an algorithm's inner step; None for HALS, GD and NeNMF."""
    kind = algorithm.kind
    if kind is AlgorithmKind.MU:
        return MajorantKind.MU_FRO if algorithm.loss is LossKind.FROBENIUS else MajorantKind.MU_KL
    if kind is AlgorithmKind.FASTMU_EXTRAPOLATED:
        return MajorantKind.FASTMU_FRO
    if kind is AlgorithmKind.FASTMU:
        if algorithm.loss is LossKind.FROBENIUS:
            return MajorantKind.FASTMU_FRO
        if algorithm.hessian_mode is HessianMode.APPROX:
            return MajorantKind.FASTMU_KL_APPROX
        return MajorantKind.FASTMU_KL_EXACT
    return None


# ===== optimal u =====

def solve_u(b: np.ndarray, W: DenseMatrix, v_l1: float, eps: float = DEFAULT_EPS_U) -> np.ndarray:
    """
    Minimize ‖b ⊘ u‖₁ over u ≥ 0 subject to ‖Wᵀu‖₁ = v_l1.

    The minimizer is proportional to sqrt(b ⊘ W𝟙_M); entries with b_i = 0
    would be 0 and are set to eps instead so the metric stays invertible.
    """
    b = np.asarray(b, dtype=np.float64).ravel()
    if b.shape[0] != W.shape[0]:
        raise DimensionError(f"b has length {b.shape[0]}, W has {W.shape[0]} rows")
    if np.any(b < 0.0) or not np.any(b > 0.0):
        raise DomainError("solve_u needs b >= 0 with at least one positive entry")
    if not v_l1 > 0.0:
        raise DomainError(f"v_l1 must be positive, got {v_l1}")
    row_sums = W.sum(axis=1)
    if np.any(row_sums <= 0.0):
        raise DomainError("every row of W must have a positive sum; clip W to ε first")

    direction = np.sqrt(b / row_sums)
    u = direction * (v_l1 / float(direction @ row_sums))
    u[b == 0.0] = eps
    return u


# ===== metric construction =====

@dataclass(frozen=True)
class MetricCache:
    """Pieces of a metric that do not depend on the block iterate."""
    kind: MajorantKind
    row_sums: np.ndarray          # W𝟙_M, length R
    col_sums: np.ndarray          # Wᵀ𝟙_R, length M
    gram: Optional[DenseMatrix] = None
    fixed: Optional[DenseMatrix] = None


def _validated_sums(W: DenseMatrix) -> tuple[np.ndarray, np.ndarray]:
    row_sums = W.sum(axis=1)
    col_sums = W.sum(axis=0)
    if np.any(row_sums <= 0.0) or np.any(col_sums <= 0.0):
        raise DomainError("W has a zero row or column; clip W to ε before building a metric")
    return row_sums, col_sums


def _fastmu_fro_u(V: DenseMatrix, W: DenseMatrix, row_sums: np.ndarray) -> DenseMatrix:
    # unnormalized optimal u for every column; the scale cancels in (Bu) ⊘ u
    S = np.sqrt(np.maximum(W @ V, 0.0) / row_sums[:, None])
    return np.where(S > 0.0, S, DEFAULT_EPS_U)


def precompute(kind: MajorantKind, V: DenseMatrix, W: DenseMatrix, eps_v: float = 1e-8) -> MetricCache:
    kind = MajorantKind(kind)
    if V.shape[0] != W.shape[1]:
        raise DimensionError(f"V {V.shape} does not conform with W {W.shape}")
    row_sums, col_sums = _validated_sums(W)

    if kind is MajorantKind.MU_FRO:
        return MetricCache(kind, row_sums, col_sums, gram=W @ W.T)
    if kind is MajorantKind.FASTMU_FRO:
        gram = W @ W.T
        S = _fastmu_fro_u(V, W, row_sums)
        return MetricCache(kind, row_sums, col_sums, gram=gram, fixed=(gram @ S) / S)
    if kind is MajorantKind.FASTMU_KL_APPROX:
        fixed = W @ (col_sums[:, None] / np.maximum(V, eps_v))
        return MetricCache(kind, row_sums, col_sums, fixed=fixed)
    return MetricCache(kind, row_sums, col_sums)


def metric(
    kind: MajorantKind,
    V: DenseMatrix,
    W: DenseMatrix,
    X: DenseMatrix,
    cache: Optional[MetricCache] = None,
    eps_v: float = 1e-8,
) -> DenseMatrix:
    """Column n holds the diagonal of the majorant metric for column n of X."""
    kind = MajorantKind(kind)
    if X.shape != (W.shape[0], V.shape[1]):
        raise DimensionError(f"iterate {X.shape} does not match (R, N) = ({W.shape[0]}, {V.shape[1]})")
    if cache is None or cache.kind is not kind:
        cache = precompute(kind, V, W, eps_v=eps_v)

    if cache.fixed is not None:
        Z = cache.fixed
    elif kind is MajorantKind.MU_FRO:
        if np.any(X <= 0.0):
            raise DomainError("MU metric divides by the iterate; it must be positive")
        Z = (cache.gram @ X) / X
    elif kind is MajorantKind.MU_KL:
        if np.any(X <= 0.0):
            raise DomainError("MU metric divides by the iterate; it must be positive")
        Z = cache.row_sums[:, None] / X
    else:
        WtX = W.T @ X
        if np.any(WtX <= 0.0):
            raise DomainError("KL metric needs a strictly positive model WᵀX")
        Z = W @ ((V * cache.col_sums[:, None]) / WtX ** 2)

    if not np.all(np.isfinite(Z)):
        raise DomainError(f"{kind.value} metric has non-finite entries")
    # a zero data column gives a zero KL column; any positive entry keeps the step well defined
    return np.maximum(Z, np.finfo(np.float64).tiny)


def metric_u(kind: MajorantKind, V: DenseMatrix, W: DenseMatrix, X: DenseMatrix) -> DenseMatrix:
    """The u vectors (column-stacked) each metric column is built from."""
    kind = MajorantKind(kind)
    if kind in (MajorantKind.MU_FRO, MajorantKind.MU_KL):
        return X.copy()
    row_sums, _ = _validated_sums(W)
    v_l1 = np.abs(V).sum(axis=0)
    if kind is MajorantKind.FASTMU_FRO:
        S = _fastmu_fro_u(V, W, row_sums)
        return S * (v_l1 / (row_sums @ S))[None, :]
    # b = W𝟙_M makes the optimal u constant
    return np.ones_like(X) * (v_l1 / row_sums.sum())[None, :]


def hessian_column(
    kind: MajorantKind, v: np.ndarray, W: DenseMatrix, x: np.ndarray, eps_v: float = 1e-8
) -> DenseMatrix:
    """
    Dense R×R matrix a metric of this kind majorizes, for one column.

    Frobenius kinds: WWᵀ. FASTMU_KL_EXACT: the true KL Hessian. FASTMU_KL_APPROX:
    the Hessian with v in place of the model. MU_KL: the Hessian with the model in
    place of v.
    """
    kind = MajorantKind(kind)
    if kind.loss is LossKind.FROBENIUS:
        return W @ W.T
    if kind is MajorantKind.FASTMU_KL_APPROX:
        weights = 1.0 / np.maximum(v, eps_v)
    else:
        wx = W.T @ x
        weights = v / wx ** 2 if kind is MajorantKind.FASTMU_KL_EXACT else 1.0 / wx
    return (W * weights[None, :]) @ W.T


# ===== verification =====

@dataclass(frozen=True)
class PsdReport:
    psd: bool
    min_eig: float


def check_majorant_psd(hessian: DenseMatrix, u: np.ndarray) -> PsdReport:
    """Minimum eigenvalue of Diag((B u) ⊘ u) − B for symmetric nonnegative B and u > 0."""
    B = np.asarray(hessian, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64).ravel()
    if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] != u.shape[0]:
        raise DimensionError(f"hessian {B.shape} and u {u.shape} do not conform")
    if np.max(np.abs(B - B.T)) > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(B)))):
        raise DomainError("hessian is not symmetric")
    if np.any(u <= 0.0):
        raise DomainError("u must be strictly positive")
    gap = np.diag((B @ u) / u) - B
    min_eig = float(eigvalsh(0.5 * (gap + gap.T))[0])
    return PsdReport(psd=min_eig >= -PSD_TOL, min_eig=min_eig)
