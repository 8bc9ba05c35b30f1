from __future__ import annotations


class NMFError(RuntimeError):
    """Base class for every error raised by fastmu."""


class DimensionError(NMFError, ValueError):
    """Raised when matrix shapes do not conform."""


class DomainError(NMFError, ValueError):
    """Raised when an operation leaves its mathematical domain (zero divisor, nonpositive KL model, ...)."""


class ConfigurationError(NMFError, ValueError):
    """Raised for invalid solver, problem or experiment configuration."""


class CsvFormatError(ConfigurationError):
    """Raised when a CSV file cannot be parsed; carries 1-based line and column."""

    def __init__(self, path: str, line: int, column: int, reason: str) -> None:
        self.path = path
        self.line = line
        self.column = column
        self.reason = reason
        super().__init__(f"{path}:{line}:{column}: {reason}")


class SolverError(NMFError):
    """Raised when a solve produces a non-finite iterate."""
