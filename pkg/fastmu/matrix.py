"""
Dense real-matrix layer.

Matrices are plain ``numpy.ndarray`` objects of dtype float64 and rank 2; the
helpers here add the shape and domain checks the rest of the package relies on.
Every function returns a new array and leaves its inputs untouched.

Random streams come from numpy's PCG64 bit generator seeded through a
``SeedSequence([seed, stream])``: the same (seed, stream) pair yields a
bit-identical stream on every platform numpy supports.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np
import numpy.typing as npt
import pandas as pd

from fastmu.errors import ConfigurationError, CsvFormatError, DimensionError, DomainError

DenseMatrix = npt.NDArray[np.float64]
Operand = Union[DenseMatrix, float]

RNG_ALGORITHM = "PCG64"

_BINARY_OPS = ("add", "sub", "mul", "div")
_UNARY_OPS = ("sqrt",)


def as_dense(x: npt.ArrayLike, name: str = "matrix") -> DenseMatrix:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} holds non-finite entries")
    return arr


def frobenius_norm(a: DenseMatrix) -> float:
    return float(np.linalg.norm(a, "fro"))


def matmul(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def ew(op: str, a: DenseMatrix, b: Operand | None = None) -> DenseMatrix:
    """Entrywise op: add, sub, mul, div, sqrt or max_scalar (the ε-clip max(a, b))."""
    if op in _UNARY_OPS:
        if np.any(a < 0.0):
            raise DomainError("sqrt of a negative entry")
        return np.sqrt(a)

    if op == "max_scalar":
        if b is None or np.ndim(b) != 0:
            raise DimensionError("max_scalar expects a scalar floor")
        return np.maximum(a, float(b))

    if op not in _BINARY_OPS:
        raise ValueError(f"unknown entrywise op {op!r}")
    if b is None:
        raise DimensionError(f"{op} needs a second operand")
    if np.ndim(b) != 0 and np.shape(b) != a.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {np.shape(b)} differ")

    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if np.any(np.asarray(b) == 0.0):
        raise DomainError("division by a zero entry; clip the divisor first")
    return a / b


# ===== random streams =====

def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream)])))


def uniform_matrix(rng: np.random.Generator, rows: int, cols: int) -> DenseMatrix:
    if rows < 1 or cols < 1:
        raise DimensionError(f"uniform_matrix needs a positive shape, got ({rows}, {cols})")
    return rng.random((rows, cols), dtype=np.float64)


# ===== CSV =====

def load_csv(path: str | Path) -> DenseMatrix:
    """Read a header-less comma-separated matrix; parse errors name the physical line and column."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=False, keep_default_na=False)
    except FileNotFoundError:
        raise ConfigurationError(f"CSV file not found: {path}") from None
    except pd.errors.EmptyDataError:
        raise CsvFormatError(str(path), 1, 1, "empty file") from None
    except pd.errors.ParserError as exc:
        line, column = _locate_parser_error(path, str(exc))
        raise CsvFormatError(str(path), line, column, "ragged row") from None

    # frame row i is physical line i + 1; blank lines are dropped after parsing
    rows = []
    for i, row in enumerate(frame.itertuples(index=False)):
        cells = ["" if not isinstance(cell, str) else cell for cell in row]
        if not any(cell.strip() for cell in cells):
            continue
        parsed = np.empty(len(cells), dtype=np.float64)
        for j, cell in enumerate(cells):
            if not cell.strip():
                raise CsvFormatError(str(path), i + 1, j + 1, "missing value")
            try:
                parsed[j] = float(cell)
            except (TypeError, ValueError):
                raise CsvFormatError(str(path), i + 1, j + 1, f"not a number: {cell!r}") from None
            if not np.isfinite(parsed[j]):
                raise CsvFormatError(str(path), i + 1, j + 1, f"non-finite value: {cell!r}")
        rows.append(parsed)
    if not rows:
        raise CsvFormatError(str(path), 1, 1, "empty file")
    return np.vstack(rows)


def save_csv(matrix: DenseMatrix, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(as_dense(matrix)).to_csv(path, header=False, index=False, float_format="%.17g")
    return path


def _locate_parser_error(path: Path, message: str) -> tuple[int, int]:
    # pandas reports "Expected N fields in line L, saw K"
    expected = None
    line = 1
    parts = message.replace(",", " ").split()
    for i, token in enumerate(parts):
        if token == "Expected" and i + 1 < len(parts) and parts[i + 1].isdigit():
            expected = int(parts[i + 1])
        if token == "line" and i + 1 < len(parts) and parts[i + 1].isdigit():
            line = int(parts[i + 1])
    column = (expected + 1) if expected is not None else 1
    return line, column
