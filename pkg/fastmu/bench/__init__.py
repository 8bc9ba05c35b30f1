from fastmu.bench.aggregate import aggregate_median
from fastmu.bench.experiment import ExperimentConfig, load_experiment_config, run_experiment
from fastmu.bench.plotting import emit_plot
from fastmu.bench.tables import load_trace_table, save_trace_table, trace_to_table

__all__ = [
    "ExperimentConfig",
    "aggregate_median",
    "emit_plot",
    "load_experiment_config",
    "load_trace_table",
    "run_experiment",
    "save_trace_table",
    "trace_to_table",
]
