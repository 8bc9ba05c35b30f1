# fastmu/config.py

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Optional

from dotenv import load_dotenv

from fastmu.errors import ConfigurationError


class LossKind(str, Enum):
    FROBENIUS = "frobenius"
    KL = "kl"


class AlgorithmKind(str, Enum):
    FASTMU = "fastmu"
    FASTMU_EXTRAPOLATED = "fastmu_ex"
    MU = "mu"
    HALS = "hals"
    NENMF = "nenmf"
    GD = "gd"


class HessianMode(str, Enum):
    EXACT = "exact"
    APPROX = "approx"


BLOCK_ORDERS = ("HW", "WH")

# algorithms with no KL rendition: extrapolation and NeNMF diverge on KL, HALS and GD are Frobenius-only
_FROBENIUS_ONLY = {
    AlgorithmKind.FASTMU_EXTRAPOLATED,
    AlgorithmKind.NENMF,
    AlgorithmKind.HALS,
    AlgorithmKind.GD,
}


def _coerce(enum_cls: type[Enum], value: Any, what: str) -> Any:
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(str(value).lower())
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ConfigurationError(f"unknown {what} {value!r} (expected one of: {allowed})") from None


@dataclass(frozen=True)
class Algorithm:
    """Solver family plus the loss it minimizes."""

    kind: AlgorithmKind
    loss: LossKind = LossKind.FROBENIUS
    # only read by fastMU with KL loss
    hessian_mode: HessianMode = HessianMode.EXACT

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", _coerce(AlgorithmKind, self.kind, "algorithm"))
        object.__setattr__(self, "loss", _coerce(LossKind, self.loss, "loss"))
        object.__setattr__(self, "hessian_mode", _coerce(HessianMode, self.hessian_mode, "hessian mode"))
        if self.kind in _FROBENIUS_ONLY and self.loss is LossKind.KL:
            raise ConfigurationError(f"{self.kind.value} is only valid with the Frobenius loss")

    @property
    def extrapolated(self) -> bool:
        return self.kind in (AlgorithmKind.FASTMU_EXTRAPOLATED, AlgorithmKind.NENMF)

    @property
    def label(self) -> str:
        suffix = "Fro" if self.loss is LossKind.FROBENIUS else "KL"
        if self.kind is AlgorithmKind.FASTMU:
            if self.loss is LossKind.KL and self.hessian_mode is HessianMode.APPROX:
                return "fastMU_KL_approx"
            return f"fastMU_{suffix}"
        if self.kind is AlgorithmKind.FASTMU_EXTRAPOLATED:
            return "fastMU_Fro_ex"
        if self.kind is AlgorithmKind.MU:
            return f"MU_{suffix}"
        return {
            AlgorithmKind.HALS: "HALS",
            AlgorithmKind.NENMF: "NeNMF",
            AlgorithmKind.GD: "GD",
        }[self.kind]


@dataclass(frozen=True)
class SolverConfig:
    """Everything a solve needs besides the data."""

    algorithm: Algorithm
    epsilon: float = 1e-16
    gamma: float = 1.9
    delta: float = 0.1
    max_inner: int = 100
    max_outer: int = 20000
    time_budget_s: Optional[float] = None
    seed: int = 0
    warm_start_mu_kl: bool = True
    block_order: str = "HW"
    # floor applied to data entries before the approximate KL metric divides by them
    eps_v: float = 1e-8

    def __post_init__(self) -> None:
        if not isinstance(self.algorithm, Algorithm):
            raise ConfigurationError("algorithm must be an Algorithm instance")
        if not self.epsilon > 0.0:
            raise ConfigurationError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0.0 < self.gamma < 2.0:
            raise ConfigurationError(f"gamma must lie in (0, 2), got {self.gamma}")
        if not 0.0 <= self.delta < 1.0:
            raise ConfigurationError(f"delta must lie in [0, 1), got {self.delta}")
        if self.max_inner < 1 or self.max_outer < 1:
            raise ConfigurationError("max_inner and max_outer must be >= 1")
        if self.time_budget_s is not None and not self.time_budget_s > 0.0:
            raise ConfigurationError(f"time_budget_s must be > 0, got {self.time_budget_s}")
        if self.block_order not in BLOCK_ORDERS:
            raise ConfigurationError(f"block_order must be one of {BLOCK_ORDERS}, got {self.block_order!r}")
        if not self.eps_v > 0.0:
            raise ConfigurationError(f"eps_v must be > 0, got {self.eps_v}")

    @property
    def effective_gamma(self) -> float:
        # extrapolated fastMU diverges with aggressive steps
        if self.algorithm.kind is AlgorithmKind.FASTMU_EXTRAPOLATED:
            return 1.0
        return self.gamma

    def with_overrides(self, **overrides: Any) -> "SolverConfig":
        unknown = set(overrides) - set(self.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown solver option(s): {', '.join(sorted(unknown))}")
        return replace(self, **overrides)


@dataclass
class Settings:
    """Process-level knobs read from the environment (and a local .env file)."""

    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "Settings":
        load_dotenv()
        raw_threads = os.getenv("NMF_BENCH_THREADS")
        threads = os.cpu_count() or 1
        if raw_threads:
            try:
                threads = max(1, int(raw_threads))
            except ValueError:
                raise ConfigurationError(f"NMF_BENCH_THREADS must be an integer, got {raw_threads!r}") from None
        return cls(threads=threads, log_level=os.getenv("NMF_BENCH_LOG_LEVEL", "INFO"))
