"""
Median aggregation of trace tables across seeds.

Aggregated rows keep the TraceTable columns; their ``seed`` column holds the
number of seeds that contributed.
"""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np
import pandas as pd

from fastmu.bench.tables import TRACE_COLUMNS
from fastmu.errors import ConfigurationError
from fastmu.logger import get_logger

logger = get_logger(__name__)

AXES = ("iteration", "time")
DEFAULT_GRID_POINTS = 200


def _normalize_axis(axis: str) -> str:
    axis = {"iter": "iteration"}.get(axis, axis)
    if axis not in AXES:
        raise ConfigurationError(f"axis must be one of {AXES}, got {axis!r}")
    return axis


def _by_iteration(group: pd.DataFrame) -> pd.DataFrame:
    grouped = group.groupby("outer_iter", sort=True)
    out = grouped[["elapsed_s", "loss_normalized", "inner_H", "inner_W"]].median()
    out["seed"] = grouped["seed"].nunique()
    return out.reset_index()


def time_grid(table: pd.DataFrame, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Geometric grid spanning the positive elapsed times of the table."""
    times = table["elapsed_s"].to_numpy(dtype=np.float64)
    times = times[np.isfinite(times) & (times > 0.0)]
    if times.size == 0:
        return np.array([0.0])
    lo, hi = float(times.min()), float(times.max())
    if hi <= lo:
        return np.array([lo])
    return np.geomspace(lo, hi, points)


def resample_previous(times: np.ndarray, values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Value of the last sample at or before each grid time (the first sample before the trace starts)."""
    idx = np.searchsorted(times, grid, side="right") - 1
    return values[np.clip(idx, 0, len(values) - 1)]


def _by_time(group: pd.DataFrame, grid: np.ndarray) -> pd.DataFrame:
    columns = {"loss_normalized": [], "inner_H": [], "inner_W": []}
    for _, run in group.groupby("seed", sort=True):
        run = run.sort_values("outer_iter")
        times = run["elapsed_s"].to_numpy(dtype=np.float64)
        for name in columns:
            columns[name].append(resample_previous(times, run[name].to_numpy(dtype=np.float64), grid))
    return pd.DataFrame(
        {
            "outer_iter": np.arange(grid.size, dtype=np.int64),
            "elapsed_s": grid,
            "loss_normalized": np.median(np.vstack(columns["loss_normalized"]), axis=0),
            "inner_H": np.median(np.vstack(columns["inner_H"]), axis=0),
            "inner_W": np.median(np.vstack(columns["inner_W"]), axis=0),
            "seed": group["seed"].nunique(),
        }
    )


def aggregate_median(
    table: pd.DataFrame,
    axis: str = "iteration",
    grid_points: int = DEFAULT_GRID_POINTS,
    expected: Optional[Iterable[str]] = None,
) -> pd.DataFrame:
    """
    Median trace per algorithm.

    iteration: entrywise median over seeds at each outer_iter.
    time: every run resampled by previous-value interpolation onto one shared
    geometric time grid, then the median per grid point.
    """
    axis = _normalize_axis(axis)
    table = table[np.isfinite(table["loss_normalized"])]
    labels = list(dict.fromkeys(table["algorithm"]))
    for label in expected or ():
        if label not in labels:
            logger.warning("aggregate_median: no rows for %s, omitted", label)

    grid = time_grid(table, grid_points) if axis == "time" else None
    parts = []
    for label in labels:
        group = table[table["algorithm"] == label]
        if group.empty:
            logger.warning("aggregate_median: no rows for %s, omitted", label)
            continue
        part = _by_iteration(group) if axis == "iteration" else _by_time(group, grid)
        part.insert(0, "algorithm", label)
        parts.append(part)

    if not parts:
        return pd.DataFrame(columns=TRACE_COLUMNS)
    out = pd.concat(parts, ignore_index=True)[TRACE_COLUMNS]
    return out.astype({"seed": "int64", "outer_iter": "int64"})
