# fastmu/contracts.py

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np
import pandas as pd

from fastmu.errors import ConfigurationError, DimensionError
from fastmu.matrix import DenseMatrix


# ===== factors =====

@dataclass(frozen=True)
class FactorPair:
    """
    The pair approximating V ≈ WᵀH.

    W is R×M and H is R×N; solvers keep both entrywise ≥ ε.
    """
    W: DenseMatrix
    H: DenseMatrix

    def __post_init__(self) -> None:
        if self.W.ndim != 2 or self.H.ndim != 2 or self.W.shape[0] != self.H.shape[0]:
            raise DimensionError(f"factor shapes {self.W.shape} and {self.H.shape} do not share a rank")

    @property
    def rank(self) -> int:
        return self.W.shape[0]

    def clipped(self, eps: float) -> "FactorPair":
        return FactorPair(W=np.maximum(self.W, eps), H=np.maximum(self.H, eps))

    def transposed(self) -> "FactorPair":
        """Swap roles so the pair factors Vᵀ instead of V."""
        return FactorPair(W=self.H, H=self.W)

    def min_entry(self) -> float:
        return float(min(self.W.min(), self.H.min()))


# ===== convergence traces =====

@dataclass(frozen=True)
class TraceRecord:
    outer_iter: int
    loss_normalized: float
    elapsed_s: float
    inner_count_H: int
    inner_count_W: int


@dataclass
class ConvergenceTrace:
    """
    Per-outer-iteration history of one solve.

    Record 0 is the starting point; each later record follows one outer sweep.
    metric_min / metric_max track the extreme metric entries seen during the run.
    """
    records: List[TraceRecord] = field(default_factory=list)
    metric_min: float = math.inf
    metric_max: float = -math.inf
    stopped_by_time: bool = False

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def observe_metric(self, lo: float, hi: float) -> None:
        self.metric_min = min(self.metric_min, lo)
        self.metric_max = max(self.metric_max, hi)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss_normalized for r in self.records], dtype=np.float64)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.elapsed_s for r in self.records], dtype=np.float64)

    @property
    def inner_H(self) -> np.ndarray:
        return np.array([r.inner_count_H for r in self.records], dtype=np.int64)

    @property
    def inner_W(self) -> np.ndarray:
        return np.array([r.inner_count_W for r in self.records], dtype=np.int64)

    @property
    def final_loss(self) -> float:
        return self.records[-1].loss_normalized if self.records else math.nan

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "outer_iter": [r.outer_iter for r in self.records],
                "elapsed_s": self.times,
                "loss_normalized": self.losses,
                "inner_H": self.inner_H,
                "inner_W": self.inner_W,
            }
        )


# ===== synthetic problems =====

class SparsitySetup(str, Enum):
    DENSE = "dense"
    DATA_SPARSE = "data_sparse"
    FAC_SPARSE = "fac_sparse"
    FAC_DATA_SPARSE = "fac_data_sparse"

    @property
    def sparse_factors(self) -> bool:
        return self in (SparsitySetup.FAC_SPARSE, SparsitySetup.FAC_DATA_SPARSE)

    @property
    def sparse_data(self) -> bool:
        return self in (SparsitySetup.DATA_SPARSE, SparsitySetup.FAC_DATA_SPARSE)


@dataclass(frozen=True)
class SyntheticSpec:
    """Fully determines a generated problem; snr_db may be math.inf for noise-free data."""
    M: int
    N: int
    R: int
    snr_db: float = 100.0
    setup: SparsitySetup = SparsitySetup.DENSE
    seed: int = 0
    sparsify_fraction: float = 0.5
    eps_fac: float = 1e-8
    # None -> R * eps_fac**2
    eps_data: Optional[float] = None

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "setup", SparsitySetup(self.setup))
        except ValueError:
            raise ConfigurationError(f"unknown sparsity setup {self.setup!r}") from None

    @property
    def data_floor(self) -> float:
        return self.R * self.eps_fac ** 2 if self.eps_data is None else self.eps_data

    def validate(self) -> "SyntheticSpec":
        if min(self.M, self.N, self.R) < 1:
            raise ConfigurationError(f"dimensions must be positive, got M={self.M} N={self.N} R={self.R}")
        if self.R > min(self.M, self.N):
            raise ConfigurationError(f"rank {self.R} exceeds min(M, N) = {min(self.M, self.N)}")
        if not 0.0 <= self.sparsify_fraction < 1.0:
            raise ConfigurationError(f"sparsify_fraction must lie in [0, 1), got {self.sparsify_fraction}")
        if self.eps_fac < 0.0 or self.data_floor < 0.0:
            raise ConfigurationError("sparsity floors must be nonnegative")
        if math.isnan(self.snr_db):
            raise ConfigurationError("snr_db is NaN")
        if self.snr_db == -math.inf:
            raise ConfigurationError("snr_db = -inf asks for infinite noise")
        return self


@dataclass(frozen=True)
class SyntheticProblem:
    V: DenseMatrix
    W_true: DenseMatrix
    H_true: DenseMatrix
    sigma: float
    spec: SyntheticSpec
