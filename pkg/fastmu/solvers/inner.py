"""
Per-block inner solvers.

Every routine updates one block of the factorization while the other factor
stays fixed. Block "H" solves for H in V ≈ WᵀH; block "W" solves for W in
Vᵀ ≈ HᵀW, so each update rule is written once against (V, F, X) with
V ≈ FᵀX and reused for both blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from fastmu.config import AlgorithmKind, LossKind, SolverConfig
from fastmu.errors import ConfigurationError, DimensionError, DomainError
from fastmu.logger import get_logger
from fastmu.losses import grad_H, lipschitz_H
from fastmu.majorants import MajorantKind, metric, metric_for, precompute
from fastmu.matrix import DenseMatrix

logger = get_logger(__name__)

MetricObserver = Callable[[float, float], None]

BLOCKS = ("H", "W")


@dataclass(frozen=True)
class BlockProblem:
    """V ≈ FᵀX with F fixed."""
    V: DenseMatrix
    F: DenseMatrix
    X: DenseMatrix


def block_problem(block_id: str, V: DenseMatrix, W: DenseMatrix, H: DenseMatrix) -> BlockProblem:
    if block_id == "H":
        return BlockProblem(V=V, F=W, X=H)
    if block_id == "W":
        return BlockProblem(V=V.T, F=H, X=W)
    raise ConfigurationError(f"unknown block {block_id!r}; expected one of {BLOCKS}")


class InnerStop:
    """
    Dynamic inner stopping: stop once ‖X^{j+1} − X^j‖_F² < δ·‖X^1 − X^0‖_F².

    A zero first displacement means the block already sits at a fixed point.
    """

    def __init__(self, delta: float) -> None:
        self.delta = delta
        self.first: Optional[float] = None

    def done(self, displacement: float) -> bool:
        if self.first is None:
            self.first = displacement
            return displacement == 0.0
        return displacement < self.delta * self.first


def _displacement(new: DenseMatrix, old: DenseMatrix) -> float:
    return float(np.sum((new - old) ** 2))


# ===== single steps =====

def inner_step_fastmu(
    X: DenseMatrix, grad: DenseMatrix, Z: DenseMatrix, gamma: float, epsilon: float
) -> DenseMatrix:
    """X' = max(X − γ·(grad ⊘ Z), ε)."""
    if X.shape != grad.shape or X.shape != Z.shape:
        raise DimensionError(f"shapes differ: X {X.shape}, grad {grad.shape}, Z {Z.shape}")
    if np.any(Z <= 0.0):
        raise DomainError("metric entries must be strictly positive")
    return np.maximum(X - gamma * (grad / Z), epsilon)


def _mu_step(problem: BlockProblem, X: DenseMatrix, loss: LossKind, epsilon: float) -> DenseMatrix:
    V, F = problem.V, problem.F
    if loss is LossKind.FROBENIUS:
        numer = F @ V
        denom = (F @ F.T) @ X
    else:
        model = F.T @ X
        if np.any(model <= 0.0):
            raise DomainError("MU-KL needs a strictly positive model")
        numer = F @ (V / model)
        denom = np.repeat(F.sum(axis=1)[:, None], X.shape[1], axis=1)
    if np.any(denom == 0.0):
        raise DomainError("MU denominator has a zero entry; clip the factors to ε first")
    return np.maximum(X * numer / denom, epsilon)


def mu_inner(
    block_id: str,
    V: DenseMatrix,
    W: DenseMatrix,
    H: DenseMatrix,
    loss: LossKind,
    epsilon: float = 1e-16,
) -> DenseMatrix:
    """One Lee-Seung multiplicative update of the chosen block."""
    problem = block_problem(block_id, V, W, H)
    return _mu_step(problem, problem.X, LossKind(loss), epsilon)


def _hals_sweep(
    X: DenseMatrix, gram: DenseMatrix, FV: DenseMatrix, epsilon: float
) -> DenseMatrix:
    X = X.copy()
    for r in range(X.shape[0]):
        pivot = gram[r, r]
        if pivot < epsilon ** 2:
            logger.warning("HALS: component %d is degenerate (pivot %.3e), row left unchanged", r, pivot)
            continue
        # gram[r] @ X sees the rows already updated in this sweep
        X[r] = np.maximum(X[r] + (FV[r] - gram[r] @ X) / pivot, epsilon)
    return X


def hals_inner(
    V: DenseMatrix,
    W: DenseMatrix,
    H: DenseMatrix,
    epsilon: float = 1e-16,
    block_id: str = "H",
) -> DenseMatrix:
    """One HALS sweep over the rows of the chosen block (Frobenius loss)."""
    problem = block_problem(block_id, V, W, H)
    F = problem.F
    return _hals_sweep(problem.X, F @ F.T, F @ problem.V, epsilon)


def gd_inner(
    V: DenseMatrix,
    W: DenseMatrix,
    H: DenseMatrix,
    gamma: float = 1.9,
    epsilon: float = 1e-16,
    block_id: str = "H",
    lipschitz: Optional[float] = None,
) -> DenseMatrix:
    """One projected gradient step with step γ/L (Frobenius loss)."""
    problem = block_problem(block_id, V, W, H)
    L = lipschitz if lipschitz is not None else lipschitz_H(problem.F)
    if not L > 0.0:
        raise DomainError("Lipschitz constant must be positive")
    grad = grad_H(problem.V, problem.F, problem.X, LossKind.FROBENIUS)
    return np.maximum(problem.X - (gamma / L) * grad, epsilon)


# ===== inner loops =====

def _run_plain(
    problem: BlockProblem,
    step: Callable[[DenseMatrix], DenseMatrix],
    config: SolverConfig,
) -> Tuple[DenseMatrix, int]:
    stop = InnerStop(config.delta)
    X = problem.X
    count = 0
    for _ in range(config.max_inner):
        X_next = step(X)
        displacement = _displacement(X_next, X)
        X = X_next
        count += 1
        if stop.done(displacement):
            break
    return X, count


def _run_extrapolated(
    problem: BlockProblem,
    step_at: Callable[[DenseMatrix], DenseMatrix],
    config: SolverConfig,
) -> Tuple[DenseMatrix, int]:
    stop = InnerStop(config.delta)
    X_prev = X = problem.X
    t = 1.0
    count = 0
    for _ in range(config.max_inner):
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / t_next
        Y = X + beta * (X - X_prev)
        X_next = step_at(Y)
        displacement = _displacement(X_next, X)
        X_prev, X, t = X, X_next, t_next
        count += 1
        if stop.done(displacement):
            break
    return X, count


def _fastmu_stepper(
    problem: BlockProblem,
    kind: MajorantKind,
    config: SolverConfig,
    gamma: float,
    on_metric: Optional[MetricObserver],
) -> Callable[[DenseMatrix], DenseMatrix]:
    loss = config.algorithm.loss
    cache = precompute(kind, problem.V, problem.F, eps_v=config.eps_v)

    def step(X: DenseMatrix) -> DenseMatrix:
        Z = metric(kind, problem.V, problem.F, X, cache=cache, eps_v=config.eps_v)
        if on_metric is not None:
            on_metric(float(Z.min()), float(Z.max()))
        grad = grad_H(problem.V, problem.F, X, loss)
        return inner_step_fastmu(X, grad, Z, gamma, config.epsilon)

    return step


def run_inner_loop(
    block_id: str,
    V: DenseMatrix,
    W: DenseMatrix,
    H: DenseMatrix,
    config: SolverConfig,
    on_metric: Optional[MetricObserver] = None,
) -> Tuple[DenseMatrix, int]:
    """
    Update one block with the configured algorithm under dynamic stopping.

    Returns the new block and the number of inner iterations performed
    (at least one, at most max_inner).
    """
    algorithm = config.algorithm
    if algorithm.extrapolated:
        return run_inner_loop_extrapolated(block_id, V, W, H, config, on_metric=on_metric)

    problem = block_problem(block_id, V, W, H)
    eps = config.epsilon

    if algorithm.kind is AlgorithmKind.FASTMU:
        step = _fastmu_stepper(problem, metric_for(algorithm), config, config.effective_gamma, on_metric)
    elif algorithm.kind is AlgorithmKind.MU:
        loss = algorithm.loss

        def step(X: DenseMatrix) -> DenseMatrix:
            return _mu_step(problem, X, loss, eps)

    elif algorithm.kind is AlgorithmKind.HALS:
        F = problem.F
        gram, FV = F @ F.T, F @ problem.V

        def step(X: DenseMatrix) -> DenseMatrix:
            return _hals_sweep(X, gram, FV, eps)

    elif algorithm.kind is AlgorithmKind.GD:
        L = lipschitz_H(problem.F)
        gamma = config.gamma

        def step(X: DenseMatrix) -> DenseMatrix:
            grad = grad_H(problem.V, problem.F, X, LossKind.FROBENIUS)
            return np.maximum(X - (gamma / L) * grad, eps)

    else:
        raise ConfigurationError(f"no inner solver for {algorithm.kind.value}")

    return _run_plain(problem, step, config)


def run_inner_loop_extrapolated(
    block_id: str,
    V: DenseMatrix,
    W: DenseMatrix,
    H: DenseMatrix,
    config: SolverConfig,
    on_metric: Optional[MetricObserver] = None,
) -> Tuple[DenseMatrix, int]:
    """
    Inner loop with the gradient and metric taken at Y = X + β(X − X_prev).

    fastMU uses γ = 1 here; NeNMF uses the step 1/L.
    """
    algorithm = config.algorithm
    if algorithm.loss is not LossKind.FROBENIUS:
        raise ConfigurationError("extrapolated inner loops only support the Frobenius loss")

    if algorithm.kind is AlgorithmKind.NENMF:
        return nenmf_inner(V, W, H, config, block_id=block_id)

    problem = block_problem(block_id, V, W, H)
    step_at = _fastmu_stepper(problem, MajorantKind.FASTMU_FRO, config, 1.0, on_metric)
    return _run_extrapolated(problem, step_at, config)


def nenmf_inner(
    V: DenseMatrix,
    W: DenseMatrix,
    H: DenseMatrix,
    config: SolverConfig,
    block_id: str = "H",
) -> Tuple[DenseMatrix, int]:
    """Nesterov fast-gradient loop with step 1/L and dynamic stopping."""
    problem = block_problem(block_id, V, W, H)
    L = lipschitz_H(problem.F)
    eps = config.epsilon

    def step_at(Y: DenseMatrix) -> DenseMatrix:
        grad = grad_H(problem.V, problem.F, Y, LossKind.FROBENIUS)
        return np.maximum(Y - grad / L, eps)

    return _run_extrapolated(problem, step_at, config)
