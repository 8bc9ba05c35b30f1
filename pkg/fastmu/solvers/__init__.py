from fastmu.solvers.inner import (
    BlockProblem,
    InnerStop,
    block_problem,
    gd_inner,
    hals_inner,
    inner_step_fastmu,
    mu_inner,
    nenmf_inner,
    run_inner_loop,
    run_inner_loop_extrapolated,
)
from fastmu.solvers.outer import mu_warm_start, random_init, solve, solve_nls

__all__ = [
    "BlockProblem",
    "InnerStop",
    "block_problem",
    "gd_inner",
    "hals_inner",
    "inner_step_fastmu",
    "mu_inner",
    "mu_warm_start",
    "nenmf_inner",
    "random_init",
    "run_inner_loop",
    "run_inner_loop_extrapolated",
    "solve",
    "solve_nls",
]
