# fastmu/bench/tables.py

from __future__ import annotations

from pathlib import Path
from typing import List

import pandas as pd

from fastmu.contracts import ConvergenceTrace
from fastmu.errors import ConfigurationError, CsvFormatError

# one row per (algorithm, seed, outer_iter)
TRACE_COLUMNS: List[str] = [
    "algorithm",
    "seed",
    "outer_iter",
    "elapsed_s",
    "loss_normalized",
    "inner_H",
    "inner_W",
]
ITERATION_COLUMNS: List[str] = [c for c in TRACE_COLUMNS if c != "elapsed_s"]

_DTYPES = {
    "algorithm": str,
    "seed": "int64",
    "outer_iter": "int64",
    "elapsed_s": "float64",
    "loss_normalized": "float64",
    "inner_H": "int64",
    "inner_W": "int64",
}

FLOAT_FORMAT = "%.17g"


def empty_table() -> pd.DataFrame:
    return pd.DataFrame({c: pd.Series(dtype=object if c == "algorithm" else _DTYPES[c]) for c in TRACE_COLUMNS})


def trace_to_table(label: str, seed: int, trace: ConvergenceTrace) -> pd.DataFrame:
    frame = trace.to_frame()
    frame.insert(0, "seed", int(seed))
    frame.insert(0, "algorithm", label)
    return frame[TRACE_COLUMNS]


def save_trace_table(table: pd.DataFrame, path: str | Path, with_time: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = TRACE_COLUMNS if with_time else ITERATION_COLUMNS
    table[columns].to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def load_trace_table(path: str | Path) -> pd.DataFrame:
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={"algorithm": str})
    except FileNotFoundError:
        raise ConfigurationError(f"trace table {path} does not exist") from None
    except pd.errors.EmptyDataError:
        raise CsvFormatError(str(path), 1, 1, "empty file") from None
    missing = [c for c in ITERATION_COLUMNS if c not in frame.columns]
    if missing:
        raise CsvFormatError(str(path), 1, 1, f"missing column(s): {', '.join(missing)}")
    if "elapsed_s" not in frame.columns:
        frame["elapsed_s"] = float("nan")
    frame = frame[TRACE_COLUMNS]
    return frame.astype({c: t for c, t in _DTYPES.items() if t is not str})
