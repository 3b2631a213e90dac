"""Free-boundary solvers for IPO timing and dividend barriers under a jump diffusion with exponential up-jumps."""

from .estimators import HarvestValueEstimator, IPOValueEstimator
from .exceptions import (
    BracketFailure, ConfigError, DomainError, JumpControlError, NoSignChange, ParameterError, PoleAtEta,
    PoleGuard, TrendNotPositive,
)
from .harvest import (
    HarvestSolution, build_harvest_solution, eval_harvest_derivatives, eval_harvest_value, harvest_value_table,
    solve_harvest_threshold,
)
from .ipo import (
    BudgetOptimum, IpoParams, IpoSolution, MinMaxResult, build_ipo_solution, eval_ipo_derivatives, eval_ipo_value,
    ipo_value_table, solve_budget_optimum, solve_ipo_threshold, solve_min_max_a,
)
from .model import CharRoots, ModelParams, characteristic_value, solve_roots
from .sim import SimConfig, SimEstimate, simulate_harvest, simulate_ipo, simulate_uncontrolled
from .verify import (
    ConditionReport, GridSpec, PiecewiseValueFunction, apply_generator, check_harvest_conditions,
    check_ipo_conditions,
)

__version__ = "0.1.0"

__all__ = [
    "ModelParams", "CharRoots", "characteristic_value", "solve_roots",
    "IpoParams", "IpoSolution", "BudgetOptimum", "MinMaxResult", "build_ipo_solution", "solve_ipo_threshold",
    "eval_ipo_value", "eval_ipo_derivatives", "ipo_value_table", "solve_budget_optimum", "solve_min_max_a",
    "HarvestSolution", "build_harvest_solution", "solve_harvest_threshold", "eval_harvest_value",
    "eval_harvest_derivatives", "harvest_value_table",
    "PiecewiseValueFunction", "GridSpec", "ConditionReport", "apply_generator", "check_ipo_conditions",
    "check_harvest_conditions",
    "SimConfig", "SimEstimate", "simulate_ipo", "simulate_harvest", "simulate_uncontrolled",
    "IPOValueEstimator", "HarvestValueEstimator",
    "JumpControlError", "ParameterError", "DomainError", "PoleAtEta", "PoleGuard", "BracketFailure",
    "NoSignChange", "TrendNotPositive", "ConfigError",
]
