"""fastMU: dense nonnegative matrix factorization with tight diagonal majorants."""

from fastmu.config import Algorithm, AlgorithmKind, HessianMode, LossKind, Settings, SolverConfig
from fastmu.contracts import ConvergenceTrace, FactorPair, SparsitySetup, SyntheticProblem, SyntheticSpec
from fastmu.errors import (
    ConfigurationError,
    CsvFormatError,
    DimensionError,
    DomainError,
    NMFError,
    SolverError,
)
from fastmu.solvers import solve, solve_nls
from fastmu.synthetic import generate

__all__ = [
    "Algorithm",
    "AlgorithmKind",
    "ConfigurationError",
    "ConvergenceTrace",
    "CsvFormatError",
    "DimensionError",
    "DomainError",
    "FactorPair",
    "HessianMode",
    "LossKind",
    "NMFError",
    "Settings",
    "SolverConfig",
    "SolverError",
    "SparsitySetup",
    "SyntheticProblem",
    "SyntheticSpec",
    "generate",
    "solve",
    "solve_nls",
]
