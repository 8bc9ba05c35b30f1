# fastmu/bench/plotting.py

from __future__ import annotations

from itertools import cycle
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from fastmu.bench.aggregate import aggregate_median  # noqa: E402
from fastmu.errors import ConfigurationError  # noqa: E402

_LINESTYLES = ("-", "--", "-.", ":")
_X_COLUMNS = {"time": "elapsed_s", "iteration": "outer_iter", "iter": "outer_iter"}
_X_LABELS = {"elapsed_s": "time (s)", "outer_iter": "outer iteration"}


def emit_plot(table: pd.DataFrame, x: str, path: str | Path, title: str | None = None) -> Path:
    """
    One log-scale polyline per algorithm, written as a standalone SVG.

    Tables holding several seeds per algorithm are reduced to their median first.
    Each line carries the SVG id ``trace-<algorithm>``.
    """
    if table.empty:
        raise ConfigurationError("cannot plot an empty trace table")
    if x not in _X_COLUMNS:
        raise ConfigurationError(f"x must be one of {sorted(_X_COLUMNS)}, got {x!r}")
    x_col = _X_COLUMNS[x]
    if x_col == "elapsed_s" and table["elapsed_s"].isna().all():
        raise ConfigurationError("table has no elapsed_s values; plot it against iterations")
    if table.groupby("algorithm")["seed"].nunique().max() > 1:
        table = aggregate_median(table, axis="time" if x_col == "elapsed_s" else "iteration")

    path = Path(path)
    colors = cycle(plt.rcParams["axes.prop_cycle"].by_key()["color"])
    fig, ax = plt.subplots(figsize=(8, 5))
    try:
        for i, (label, group) in enumerate(table.groupby("algorithm", sort=False)):
            group = group.sort_values("outer_iter")
            y = np.maximum(group["loss_normalized"].to_numpy(dtype=np.float64), np.finfo(np.float64).tiny)
            (line,) = ax.plot(
                group[x_col].to_numpy(dtype=np.float64),
                y,
                label=str(label),
                color=next(colors),
                linestyle=_LINESTYLES[(i // 10) % len(_LINESTYLES)],
            )
            line.set_gid(f"trace-{label}")
        ax.set_yscale("log")
        if x_col == "elapsed_s":
            ax.set_xscale("log")
        ax.set_xlabel(_X_LABELS[x_col])
        ax.set_ylabel("normalized loss")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg")
    except OSError as exc:
        raise OSError(f"cannot write plot to {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path
