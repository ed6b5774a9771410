"""Iteratively reweighted l1 solvers with Anderson acceleration and a nonmonotone guard."""

from .anderson import AndersonWindow, MixWeights, mix, solve_alpha
from .errors import ContractViolation, RegularizerPoleError, ResidualsVanished, SolverDivergence
from .fixed_point import IterateState, MapOutput, apply_map, prox_step
from .harness import ExperimentSpec, RunSummary, generate_instance, run_experiment, sparsity_metrics
from .problem import (
    ProblemInstance, SmoothnessInfo, estimate_lipschitz, objective_value, relaxed_objective,
    smooth_gradient, smooth_value, surrogate_value,
)
from .regularizers import Family, RegularizerSpec, phi_value, weight
from .solvers import (
    SOLVERS, GuardAccumulator, SolveConfig, SolveReport, Termination, chi_measure, guard_accept,
    guard_update, opttol, run_aairl1, run_guard_aairl1, run_irl1, run_irl2, run_nesirl1, solve,
)

__all__ = [
    "AndersonWindow",
    "apply_map",
    "chi_measure",
    "ContractViolation",
    "estimate_lipschitz",
    "ExperimentSpec",
    "Family",
    "generate_instance",
    "guard_accept",
    "guard_update",
    "GuardAccumulator",
    "IterateState",
    "MapOutput",
    "mix",
    "MixWeights",
    "objective_value",
    "opttol",
    "phi_value",
    "ProblemInstance",
    "prox_step",
    "RegularizerPoleError",
    "RegularizerSpec",
    "relaxed_objective",
    "ResidualsVanished",
    "run_aairl1",
    "run_experiment",
    "run_guard_aairl1",
    "run_irl1",
    "run_irl2",
    "run_nesirl1",
    "RunSummary",
    "smooth_gradient",
    "smooth_value",
    "SmoothnessInfo",
    "solve",
    "solve_alpha",
    "SolveConfig",
    "SolverDivergence",
    "SolveReport",
    "SOLVERS",
    "sparsity_metrics",
    "surrogate_value",
    "Termination",
    "weight",
]

__version__ = "0.1.0"
