"""
Alternating outer loop: NMF (both blocks) and NLS (H block only, W fixed).
"""

from __future__ import annotations

import math
import time
from typing import Optional, Tuple

import numpy as np

from fastmu.config import LossKind, SolverConfig
from fastmu.contracts import ConvergenceTrace, FactorPair, TraceRecord
from fastmu.errors import DimensionError, DomainError, SolverError
from fastmu.logger import get_logger
from fastmu.losses import loss_normalized
from fastmu.matrix import DenseMatrix, as_dense, make_rng, uniform_matrix
from fastmu.solvers.inner import mu_inner, run_inner_loop

logger = get_logger(__name__)

INIT_STREAM = 1


def random_init(M: int, N: int, R: int, seed: int, epsilon: float) -> FactorPair:
    """Uniform [0, 1) factors (W first, then H), clipped to ε."""
    rng = make_rng(seed, stream=INIT_STREAM)
    W = uniform_matrix(rng, R, M)
    H = uniform_matrix(rng, R, N)
    return FactorPair(W=W, H=H).clipped(epsilon)


def mu_warm_start(V: DenseMatrix, factors: FactorPair, epsilon: float) -> FactorPair:
    """One full MU-KL sweep (H then W)."""
    H = mu_inner("H", V, factors.W, factors.H, LossKind.KL, epsilon)
    W = mu_inner("W", V, factors.W, H, LossKind.KL, epsilon)
    return FactorPair(W=W, H=H)


def _check_data(V: DenseMatrix) -> DenseMatrix:
    V = as_dense(V, "V")
    if np.any(V < 0.0):
        raise DomainError("V must be entrywise nonnegative")
    return V


def _ensure_finite(block: DenseMatrix, name: str, outer_iter: int) -> None:
    if not np.all(np.isfinite(block)):
        raise SolverError(f"{name} became non-finite at outer iteration {outer_iter}")


class _Clock:
    def __init__(self, budget_s: Optional[float]) -> None:
        self.budget_s = budget_s
        self.start = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def exhausted(self) -> bool:
        return self.budget_s is not None and self.elapsed() >= self.budget_s


def solve(
    V: DenseMatrix,
    R: int,
    config: SolverConfig,
    init: Optional[FactorPair] = None,
) -> Tuple[FactorPair, ConvergenceTrace]:
    """
    Factor V ≈ WᵀH by alternating block updates.

    The trace holds max_outer records: the starting point, then one record
    per outer sweep (fewer if the time budget runs out first).
    """
    V = _check_data(V)
    M, N = V.shape
    if not 1 <= R <= min(M, N):
        raise DimensionError(f"rank {R} must lie in [1, min(M, N) = {min(M, N)}]")

    algorithm = config.algorithm
    eps = config.epsilon
    clock = _Clock(config.time_budget_s)

    if init is None:
        factors = random_init(M, N, R, config.seed, eps)
    else:
        if init.W.shape != (R, M) or init.H.shape != (R, N):
            raise DimensionError(f"init shapes {init.W.shape}, {init.H.shape} do not match R={R}, V {V.shape}")
        factors = init.clipped(eps)
    if algorithm.loss is LossKind.KL and config.warm_start_mu_kl:
        factors = mu_warm_start(V, factors, eps)

    logger.info(
        "solve %s: V %dx%d, rank %d, max_outer %d, delta %g",
        algorithm.label, M, N, R, config.max_outer, config.delta,
    )

    trace = ConvergenceTrace()
    W, H = factors.W, factors.H
    trace.append(TraceRecord(0, loss_normalized(V, W, H, algorithm.loss), clock.elapsed(), 0, 0))

    for k in range(1, config.max_outer):
        if clock.exhausted():
            trace.stopped_by_time = True
            logger.info("%s: time budget of %.3fs reached after %d outer iterations",
                        algorithm.label, config.time_budget_s, k - 1)
            break
        counts = {"H": 0, "W": 0}
        for block in config.block_order:
            if block == "H":
                H, counts["H"] = run_inner_loop("H", V, W, H, config, on_metric=trace.observe_metric)
                _ensure_finite(H, "H", k)
            else:
                W, counts["W"] = run_inner_loop("W", V, W, H, config, on_metric=trace.observe_metric)
                _ensure_finite(W, "W", k)
        trace.append(
            TraceRecord(k, loss_normalized(V, W, H, algorithm.loss), clock.elapsed(), counts["H"], counts["W"])
        )

    _log_metric_range(algorithm.label, trace)
    return FactorPair(W=W, H=H), trace


def solve_nls(
    V: DenseMatrix,
    W_fixed: DenseMatrix,
    config: SolverConfig,
    init_H: Optional[DenseMatrix] = None,
) -> Tuple[DenseMatrix, ConvergenceTrace]:
    """Solve the convex subproblem in H with W held fixed; trace records mirror solve()."""
    V = _check_data(V)
    W = as_dense(W_fixed, "W_fixed")
    M, N = V.shape
    R = W.shape[0]
    if W.shape[1] != M:
        raise DimensionError(f"W_fixed {W.shape} does not match V {V.shape}")

    algorithm = config.algorithm
    eps = config.epsilon
    clock = _Clock(config.time_budget_s)

    W = np.maximum(W, eps)
    if init_H is None:
        H = random_init(M, N, R, config.seed, eps).H
    else:
        H = as_dense(init_H, "init_H")
        if H.shape != (R, N):
            raise DimensionError(f"init_H {H.shape} does not match ({R}, {N})")
        H = np.maximum(H, eps)
    if algorithm.loss is LossKind.KL and config.warm_start_mu_kl:
        H = mu_inner("H", V, W, H, LossKind.KL, eps)

    logger.info("solve_nls %s: V %dx%d, rank %d, max_outer %d", algorithm.label, M, N, R, config.max_outer)

    trace = ConvergenceTrace()
    trace.append(TraceRecord(0, loss_normalized(V, W, H, algorithm.loss), clock.elapsed(), 0, 0))
    for k in range(1, config.max_outer):
        if clock.exhausted():
            trace.stopped_by_time = True
            break
        H, count = run_inner_loop("H", V, W, H, config, on_metric=trace.observe_metric)
        _ensure_finite(H, "H", k)
        trace.append(TraceRecord(k, loss_normalized(V, W, H, algorithm.loss), clock.elapsed(), count, 0))

    _log_metric_range(algorithm.label, trace)
    return H, trace


def _log_metric_range(label: str, trace: ConvergenceTrace) -> None:
    if math.isfinite(trace.metric_min):
        logger.info("%s: metric entries ranged over [%.3e, %.3e]", label, trace.metric_min, trace.metric_max)
