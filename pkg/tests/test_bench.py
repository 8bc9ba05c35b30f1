import xml.etree.ElementTree as ET

import numpy as np
import pandas as pd
import pytest

from fastmu.bench.aggregate import aggregate_median, resample_previous, time_grid
from fastmu.bench.plotting import emit_plot
from fastmu.bench.tables import (
    ITERATION_COLUMNS,
    TRACE_COLUMNS,
    load_trace_table,
    save_trace_table,
    trace_to_table,
)
from fastmu.contracts import ConvergenceTrace, TraceRecord
from fastmu.errors import ConfigurationError, CsvFormatError
from fastmu.matrix import make_rng

SVG = "{http://www.w3.org/2000/svg}"


def _table(label, seed, losses, times=None):
    n = len(losses)
    times = np.linspace(0.01, 1.0, n) if times is None else times
    return pd.DataFrame(
        {
            "algorithm": label,
            "seed": seed,
            "outer_iter": np.arange(n, dtype=np.int64),
            "elapsed_s": np.asarray(times, dtype=np.float64),
            "loss_normalized": np.asarray(losses, dtype=np.float64),
            "inner_H": np.ones(n, dtype=np.int64),
            "inner_W": np.ones(n, dtype=np.int64),
        }
    )


def test_trace_to_table_columns():
    trace = ConvergenceTrace()
    trace.append(TraceRecord(0, 1.0, 0.0, 0, 0))
    trace.append(TraceRecord(1, 0.5, 0.1, 3, 4))
    table = trace_to_table("MU_Fro", 2, trace)
    assert list(table.columns) == TRACE_COLUMNS
    assert table["seed"].tolist() == [2, 2]
    assert table["inner_W"].tolist() == [0, 4]


def test_trace_table_round_trip(tmp_path):
    table = pd.concat([_table("fastMU_Fro", 0, [1.0, 1 / 3, 1e-300]), _table("MU_Fro", 1, [2.0, 0.1, 0.05])],
                      ignore_index=True)
    path = save_trace_table(table, tmp_path / "traces.csv")
    pd.testing.assert_frame_equal(load_trace_table(path), table)


def test_iteration_table_has_no_time_column(tmp_path):
    path = save_trace_table(_table("A", 0, [1.0, 0.5]), tmp_path / "traces_iter.csv", with_time=False)
    assert path.read_text().splitlines()[0] == ",".join(ITERATION_COLUMNS)
    loaded = load_trace_table(path)
    assert loaded["elapsed_s"].isna().all()


def test_load_trace_table_requires_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("algorithm,seed\nA,0\n")
    with pytest.raises(CsvFormatError):
        load_trace_table(path)


# ===== aggregation =====

def test_median_of_a_single_seed_is_the_trace():
    table = _table("A", 0, [3.0, 2.0, 1.0])
    out = aggregate_median(table, axis="iteration")
    np.testing.assert_array_equal(out["loss_normalized"], [3.0, 2.0, 1.0])
    assert out["seed"].tolist() == [1, 1, 1]


@pytest.mark.parametrize("axis", ["iteration", "time"])
def test_median_of_constant_traces(axis):
    table = pd.concat([_table("A", s, [v] * 4) for s, v in enumerate([1.0, 2.0, 9.0])], ignore_index=True)
    out = aggregate_median(table, axis=axis)
    np.testing.assert_array_equal(out["loss_normalized"], 2.0)


def test_time_resampling_keeps_monotone_traces_monotone():
    rng = make_rng(0, stream=3)
    parts = []
    for seed in range(5):
        losses = np.sort(rng.random(30))[::-1]
        times = np.cumsum(rng.random(30) + 1e-3)
        parts.append(_table("A", seed, losses, times))
    out = aggregate_median(pd.concat(parts, ignore_index=True), axis="time", grid_points=50)
    assert len(out) == 50
    assert np.all(np.diff(out["loss_normalized"]) <= 0.0)
    assert np.all(np.diff(out["elapsed_s"]) > 0.0)


def test_resample_previous_value():
    times = np.array([1.0, 2.0, 4.0])
    values = np.array([9.0, 5.0, 1.0])
    np.testing.assert_array_equal(resample_previous(times, values, np.array([0.5, 1.0, 3.0, 10.0])), [9.0, 9.0, 5.0, 1.0])


def test_time_grid_is_geometric():
    grid = time_grid(_table("A", 0, [1.0] * 5, [0.001, 0.01, 0.1, 1.0, 10.0]), points=5)
    np.testing.assert_allclose(grid, [0.001, 0.01, 0.1, 1.0, 10.0], rtol=1e-12)


def test_missing_algorithms_are_reported(caplog):
    out = aggregate_median(_table("A", 0, [1.0]), expected=["A", "B"])
    assert set(out["algorithm"]) == {"A"}
    assert any("B" in r.getMessage() for r in caplog.records)


def test_unknown_axis():
    with pytest.raises(ConfigurationError):
        aggregate_median(_table("A", 0, [1.0]), axis="wall")


# ===== plots =====

def _lines(path, gid):
    root = ET.parse(path).getroot()
    group = next(g for g in root.iter(f"{SVG}g") if g.get("id") == gid)
    return list(group.iter(f"{SVG}path"))


def test_plot_is_well_formed_svg_with_one_line_per_algorithm(tmp_path):
    table = pd.concat([_table("fastMU_Fro", 0, [1.0, 0.1, 0.01]), _table("MU_Fro", 0, [1.0, 0.5, 0.2])],
                      ignore_index=True)
    path = emit_plot(table, "iter", tmp_path / "plot.svg")
    root = ET.parse(path).getroot()
    ids = {g.get("id") for g in root.iter(f"{SVG}g")}
    assert {"trace-fastMU_Fro", "trace-MU_Fro"} <= ids
    style_a = _lines(path, "trace-fastMU_Fro")[0].get("style")
    style_b = _lines(path, "trace-MU_Fro")[0].get("style")
    assert style_a != style_b


def test_plot_of_a_constant_trace_is_horizontal(tmp_path):
    path = emit_plot(_table("A", 0, [0.5] * 4), "iteration", tmp_path / "flat.svg")
    d = _lines(path, "trace-A")[0].get("d")
    coords = [float(tok) for tok in d.replace("M", " ").replace("L", " ").split()]
    ys = coords[1::2]
    assert len(ys) >= 2 and max(ys) - min(ys) < 1e-9


def test_plot_on_time_axis_aggregates_seeds(tmp_path):
    table = pd.concat([_table("A", s, [1.0, 0.5, 0.25]) for s in range(3)], ignore_index=True)
    assert emit_plot(table, "time", tmp_path / "time.svg").exists()


def test_plot_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        emit_plot(_table("A", 0, [])[TRACE_COLUMNS], "iter", tmp_path / "x.svg")
    table = _table("A", 0, [1.0, 0.5])
    with pytest.raises(ConfigurationError):
        emit_plot(table, "loss", tmp_path / "x.svg")
    table["elapsed_s"] = np.nan
    with pytest.raises(ConfigurationError):
        emit_plot(table, "time", tmp_path / "x.svg")
    (tmp_path / "blocker").write_text("")
    with pytest.raises(OSError, match="blocker"):
        emit_plot(_table("A", 0, [1.0, 0.5]), "iter", tmp_path / "blocker" / "x.svg")
