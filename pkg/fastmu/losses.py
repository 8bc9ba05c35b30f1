"""
Frobenius and Kullback-Leibler objectives for V ≈ WᵀH, their block
gradients, and the Lipschitz constant used by the gradient baselines.

The KL value is the generalized divergence Σ v·log(v/m) − v + m with the
convention 0·log(0/m) = 0, so a zero data entry contributes only m.
"""

from __future__ import annotations

import numpy as np
from scipy.special import xlogy

from fastmu.config import LossKind
from fastmu.errors import DimensionError, DomainError
from fastmu.matrix import DenseMatrix

POWER_ITER_MAX = 1000
POWER_ITER_RTOL = 1e-10


def model(W: DenseMatrix, H: DenseMatrix) -> DenseMatrix:
    return W.T @ H


def _check_shapes(V: DenseMatrix, W: DenseMatrix, H: DenseMatrix) -> None:
    if W.shape[0] != H.shape[0]:
        raise DimensionError(f"W {W.shape} and H {H.shape} disagree on the rank")
    if V.shape != (W.shape[1], H.shape[1]):
        raise DimensionError(f"V {V.shape} does not match WᵀH ({W.shape[1]}, {H.shape[1]})")


def _positive_model(W: DenseMatrix, H: DenseMatrix) -> DenseMatrix:
    WtH = model(W, H)
    if np.any(WtH <= 0.0):
        raise DomainError("KL needs a strictly positive model WᵀH; clip the factors to ε first")
    return WtH


def _elementwise(V: DenseMatrix, W: DenseMatrix, H: DenseMatrix, kind: LossKind) -> DenseMatrix:
    _check_shapes(V, W, H)
    if kind is LossKind.FROBENIUS:
        return 0.5 * (V - model(W, H)) ** 2
    WtH = _positive_model(W, H)
    return xlogy(V, V / WtH) - V + WtH


def loss(V: DenseMatrix, W: DenseMatrix, H: DenseMatrix, kind: LossKind) -> float:
    return float(np.sum(_elementwise(V, W, H, LossKind(kind))))


def loss_normalized(V: DenseMatrix, W: DenseMatrix, H: DenseMatrix, kind: LossKind) -> float:
    return loss(V, W, H, kind) / V.size


def loss_columns(V: DenseMatrix, W: DenseMatrix, H: DenseMatrix, kind: LossKind) -> np.ndarray:
    """Per-column objective; the total loss is their sum."""
    return np.sum(_elementwise(V, W, H, LossKind(kind)), axis=0)


def grad_H(V: DenseMatrix, W: DenseMatrix, H: DenseMatrix, kind: LossKind) -> DenseMatrix:
    _check_shapes(V, W, H)
    if LossKind(kind) is LossKind.FROBENIUS:
        return W @ (model(W, H) - V)
    return W @ (1.0 - V / _positive_model(W, H))


def grad_W(V: DenseMatrix, W: DenseMatrix, H: DenseMatrix, kind: LossKind) -> DenseMatrix:
    # Ψ(V, W, H) == Ψ(Vᵀ, H, W), so the W gradient is the H gradient of the transposed problem
    return grad_H(V.T, H, W, kind)


def lipschitz_H(W: DenseMatrix) -> float:
    """Largest eigenvalue of WWᵀ by power iteration."""
    if not np.any(W):
        raise DomainError("Lipschitz constant of a zero matrix is undefined")
    gram = W @ W.T
    x = np.ones(gram.shape[0]) + np.linspace(0.0, 1e-3, gram.shape[0])
    x /= np.linalg.norm(x)
    lam = float(x @ gram @ x)
    for _ in range(POWER_ITER_MAX):
        y = gram @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            break
        x = y / norm
        lam_next = float(x @ gram @ x)
        if abs(lam_next - lam) <= POWER_ITER_RTOL * abs(lam_next):
            lam = lam_next
            break
        lam = lam_next
    if lam <= 0.0:
        raise DomainError("Lipschitz constant is zero")
    return lam
