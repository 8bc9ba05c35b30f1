# fastmu/bench/experiment.py

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import orjson
import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from fastmu.bench.tables import empty_table, save_trace_table, trace_to_table
from fastmu.config import Algorithm, AlgorithmKind, HessianMode, LossKind, Settings, SolverConfig
from fastmu.contracts import ConvergenceTrace, SparsitySetup, SyntheticSpec
from fastmu.errors import ConfigurationError, NMFError
from fastmu.logger import get_logger
from fastmu.matrix import DenseMatrix, load_csv
from fastmu.solvers import solve, solve_nls
from fastmu.synthetic import generate

logger = get_logger(__name__)

Mode = Literal["nmf", "nls"]

# solver options an algorithm entry may override; the seed is owned by the runner
_OVERRIDABLE = set(SolverConfig.__dataclass_fields__) - {"algorithm", "seed"}


# --- Experiment configuration model -----------------------------------------


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ExperimentMeta(_Strict):
    id: str = Field(default="experiment", description="Run identifier, echoed in summary.json.")
    description: str = ""
    output_dir: Path = Field(..., description="Directory receiving traces.csv and friends.")
    seeds: int = Field(default=5, ge=1, description="Number P of realizations.")
    timed: bool = Field(default=False, description="Run cells one at a time for clean wall-clock traces.")


class SyntheticSection(_Strict):
    M: int = Field(..., ge=1)
    N: int = Field(..., ge=1)
    R: int = Field(..., ge=1)
    snr_db: float = 100.0
    setup: SparsitySetup = SparsitySetup.DENSE
    seed: int = 0
    sparsify_fraction: float = Field(default=0.5, ge=0.0, lt=1.0)
    eps_fac: float = Field(default=1e-8, ge=0.0)
    eps_data: Optional[float] = Field(default=None, ge=0.0)

    def to_spec(self, seed_index: int = 0) -> SyntheticSpec:
        return SyntheticSpec(
            M=self.M,
            N=self.N,
            R=self.R,
            snr_db=self.snr_db,
            setup=self.setup,
            seed=self.seed + seed_index,
            sparsify_fraction=self.sparsify_fraction,
            eps_fac=self.eps_fac,
            eps_data=self.eps_data,
        ).validate()


class CsvSection(_Strict):
    path: Path
    rank: int = Field(..., ge=1)
    fixed_w: Optional[Path] = Field(default=None, description="R×M factor held fixed in NLS runs.")


class ProblemSection(_Strict):
    synthetic: Optional[SyntheticSection] = None
    csv: Optional[CsvSection] = None

    @model_validator(mode="after")
    def _exactly_one(self) -> "ProblemSection":
        if (self.synthetic is None) == (self.csv is None):
            raise ValueError("problem needs exactly one of 'synthetic' or 'csv'")
        return self

    @property
    def rank(self) -> int:
        return self.synthetic.R if self.synthetic is not None else self.csv.rank


class SolverSection(_Strict):
    epsilon: float = 1e-16
    gamma: float = 1.9
    delta: float = 0.1
    max_inner: int = 100
    max_outer: int = 20000
    time_budget_s: Optional[float] = None
    warm_start_mu_kl: bool = True
    block_order: str = "HW"
    eps_v: float = 1e-8
    # base seed for the shared initialization of CSV problems
    seed: int = 0


class AlgorithmEntry(_Strict):
    kind: AlgorithmKind
    loss: LossKind = LossKind.FROBENIUS
    hessian_mode: HessianMode = HessianMode.EXACT
    overrides: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("overrides")
    @classmethod
    def _known_options(cls, value: Dict[str, Any]) -> Dict[str, Any]:
        unknown = set(value) - _OVERRIDABLE
        if unknown:
            raise ValueError(f"unknown solver option(s) in overrides: {', '.join(sorted(unknown))}")
        return value

    def to_algorithm(self) -> Algorithm:
        return Algorithm(kind=self.kind, loss=self.loss, hessian_mode=self.hessian_mode)


class SweepSection(_Strict):
    delta: List[float] = Field(default_factory=lambda: [0.0, 0.001, 0.01, 0.05, 0.1, 0.3, 0.6, 0.9])


class ExperimentConfig(_Strict):
    experiment: ExperimentMeta
    problem: ProblemSection
    solver: SolverSection = Field(default_factory=SolverSection)
    # a loss name selects the default roster for that loss
    algorithms: Union[LossKind, List[AlgorithmEntry]] = LossKind.FROBENIUS
    sweep: Optional[SweepSection] = None

    @model_validator(mode="after")
    def _valid_roster(self) -> "ExperimentConfig":
        for entry in self.roster():
            # raises ConfigurationError (a ValueError) for invalid pairs and options
            base_solver_config(self.solver, entry.to_algorithm()).with_overrides(**entry.overrides)
        return self

    def roster(self) -> List[AlgorithmEntry]:
        if isinstance(self.algorithms, LossKind):
            return default_roster(self.algorithms)
        return list(self.algorithms)


def default_roster(loss: LossKind) -> List[AlgorithmEntry]:
    if LossKind(loss) is LossKind.FROBENIUS:
        kinds = [AlgorithmKind.MU, AlgorithmKind.HALS, AlgorithmKind.NENMF, AlgorithmKind.GD,
                 AlgorithmKind.FASTMU, AlgorithmKind.FASTMU_EXTRAPOLATED]
        return [AlgorithmEntry(kind=k) for k in kinds]
    return [
        AlgorithmEntry(kind=AlgorithmKind.MU, loss=LossKind.KL),
        AlgorithmEntry(kind=AlgorithmKind.FASTMU, loss=LossKind.KL, hessian_mode=HessianMode.EXACT),
        AlgorithmEntry(kind=AlgorithmKind.FASTMU, loss=LossKind.KL, hessian_mode=HessianMode.APPROX),
    ]


def base_solver_config(section: SolverSection, algorithm: Algorithm) -> SolverConfig:
    options = section.model_dump(exclude={"seed"})
    return SolverConfig(algorithm=algorithm, **options)


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except OSError as exc:
        raise ConfigurationError(f"cannot read experiment config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: expected a mapping at the top level")
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


# --- Problems and cells ------------------------------------------------------


@dataclass(frozen=True)
class Realization:
    seed_index: int
    init_seed: int
    V: DenseMatrix
    W_fixed: Optional[DenseMatrix] = None


@dataclass(frozen=True)
class Cell:
    label: str
    seed_index: int
    rank: int
    solver_config: SolverConfig


@dataclass
class CellResult:
    cell: Cell
    table: pd.DataFrame
    trace: Optional[ConvergenceTrace] = None
    error: Optional[NMFError] = None


def build_realizations(config: ExperimentConfig, mode: Mode) -> List[Realization]:
    problem = config.problem
    seeds = config.experiment.seeds
    if problem.synthetic is not None:
        out = []
        for p in range(seeds):
            generated = generate(problem.synthetic.to_spec(p))
            out.append(
                Realization(
                    seed_index=p,
                    init_seed=generated.spec.seed,
                    V=generated.V,
                    W_fixed=generated.W_true if mode == "nls" else None,
                )
            )
        return out

    V = load_csv(problem.csv.path)
    W_fixed = None
    if mode == "nls":
        if problem.csv.fixed_w is None:
            raise ConfigurationError("nls on a CSV problem needs problem.csv.fixed_w")
        W_fixed = load_csv(problem.csv.fixed_w)
    return [
        Realization(seed_index=p, init_seed=config.solver.seed + p, V=V, W_fixed=W_fixed)
        for p in range(seeds)
    ]


def build_cells(config: ExperimentConfig, realizations: List[Realization], sweep: bool = False) -> List[Cell]:
    deltas: List[Optional[float]] = [None]
    if sweep:
        deltas = list((config.sweep or SweepSection()).delta)

    rank = config.problem.rank
    cells = []
    for entry in config.roster():
        algorithm = entry.to_algorithm()
        base = base_solver_config(config.solver, algorithm).with_overrides(**entry.overrides)
        for delta in deltas:
            solver_config = base if delta is None else base.with_overrides(delta=delta)
            label = algorithm.label if delta is None else f"{algorithm.label}[delta={delta:g}]"
            for real in realizations:
                cells.append(Cell(label, real.seed_index, rank, solver_config.with_overrides(seed=real.init_seed)))
    return cells


# --- Core experiment loop ----------------------------------------------------


def _run_cell(cell: Cell, real: Realization, mode: Mode) -> CellResult:
    logger.info("cell %s seed %d: start", cell.label, cell.seed_index)
    try:
        if mode == "nls":
            _, trace = solve_nls(real.V, real.W_fixed, cell.solver_config)
        else:
            _, trace = solve(real.V, cell.rank, cell.solver_config)
    except NMFError as exc:
        logger.error("cell %s seed %d failed: %s", cell.label, cell.seed_index, exc)
        return CellResult(cell=cell, table=empty_table(), error=exc)
    logger.info("cell %s seed %d: final loss %.6e after %d records",
                cell.label, cell.seed_index, trace.final_loss, len(trace))
    return CellResult(cell=cell, table=trace_to_table(cell.label, cell.seed_index, trace), trace=trace)


@dataclass
class ExperimentRunner:
    """Runs the (algorithm × seed) grid of one experiment and writes its artifacts."""

    config: ExperimentConfig
    mode: Mode = "nmf"
    sweep: bool = False
    settings: Settings = field(default_factory=Settings.from_env)
    timed: Optional[bool] = None
    results: List[CellResult] = field(default_factory=list)

    @property
    def failures(self) -> List[CellResult]:
        return [r for r in self.results if r.error is not None]

    def run(self) -> pd.DataFrame:
        realizations = build_realizations(self.config, self.mode)
        by_seed = {r.seed_index: r for r in realizations}
        cells = build_cells(self.config, realizations, sweep=self.sweep)
        timed = self.config.experiment.timed if self.timed is None else self.timed
        workers = 1 if timed else max(1, min(self.settings.threads, len(cells)))
        logger.info("experiment %s: %d cells on %d worker(s)", self.config.experiment.id, len(cells), workers)

        if workers == 1:
            results = [_run_cell(c, by_seed[c.seed_index], self.mode) for c in cells]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda c: _run_cell(c, by_seed[c.seed_index], self.mode), cells))
        self.results = results

        tables = [r.table for r in results if r.error is None]
        table = pd.concat(tables, ignore_index=True) if tables else empty_table()
        self._write_artifacts(table, results)
        return table

    # --- internal helpers ----------------------------------------------------

    def _write_artifacts(self, table: pd.DataFrame, results: List[CellResult]) -> None:
        out = Path(self.config.experiment.output_dir)
        out.mkdir(parents=True, exist_ok=True)

        save_trace_table(table, out / "traces.csv", with_time=True)
        save_trace_table(table, out / "traces_iter.csv", with_time=False)

        errors = pd.DataFrame(
            [
                {
                    "algorithm": r.cell.label,
                    "seed": r.cell.seed_index,
                    "error_type": type(r.error).__name__,
                    "message": str(r.error),
                }
                for r in results
                if r.error is not None
            ],
            columns=["algorithm", "seed", "error_type", "message"],
        )
        errors.to_csv(out / "errors.csv", index=False, lineterminator="\n")

        if self.sweep:
            inner = (
                table.groupby(["algorithm", "outer_iter"], sort=False)[["inner_H", "inner_W"]]
                .median()
                .reset_index()
            )
            inner.to_csv(out / "inner_counts.csv", index=False, float_format="%.17g", lineterminator="\n")

        with open(out / "config_resolved.yaml", "w", encoding="utf-8") as f:
            yaml.safe_dump(self.config.model_dump(mode="json"), f, sort_keys=False)

        (out / "summary.json").write_bytes(
            orjson.dumps(self._summary(results), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS)
        )

    def _summary(self, results: List[CellResult]) -> Dict[str, Any]:
        cells = []
        for r in results:
            entry: Dict[str, Any] = {"algorithm": r.cell.label, "seed": r.cell.seed_index}
            if r.error is not None:
                entry.update(status="error", error=str(r.error))
            else:
                trace = r.trace
                entry.update(
                    status="ok",
                    final_loss_normalized=_json_float(trace.final_loss),
                    outer_iterations=len(trace) - 1,
                    total_inner_H=int(trace.inner_H.sum()),
                    total_inner_W=int(trace.inner_W.sum()),
                    elapsed_s=_json_float(float(trace.times[-1])),
                    stopped_by_time=trace.stopped_by_time,
                )
            cells.append(entry)
        return {
            "experiment_id": self.config.experiment.id,
            "mode": self.mode,
            "sweep": self.sweep,
            "n_cells": len(results),
            "n_errors": sum(r.error is not None for r in results),
            "cells": cells,
        }


def _json_float(value: float) -> Optional[float]:
    return float(value) if math.isfinite(value) else None


def run_experiment(
    config: ExperimentConfig,
    mode: Mode = "nmf",
    sweep: bool = False,
    settings: Optional[Settings] = None,
    timed: Optional[bool] = None,
) -> pd.DataFrame:
    """Run every (algorithm, seed) cell and write the run artifacts into output_dir."""
    runner = ExperimentRunner(
        config=config,
        mode=mode,
        sweep=sweep,
        settings=settings or Settings.from_env(),
        timed=timed,
    )
    return runner.run()
