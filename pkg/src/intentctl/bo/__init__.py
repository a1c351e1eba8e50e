from intentctl.bo.acquisition import (
    LOG_FLOOR,
    constrained_log_acquisition,
    ei,
    feasibility_prob,
    log_ei,
    log_feasibility,
    pi,
    ucb,
)
from intentctl.bo.gp import GpHyper, GpModel, SingularKernel, gp_fit, rbf_kernel
from intentctl.bo.loop import (
    NotStuck,
    OptimizerConfig,
    OptimizerState,
    PreferenceOptimizer,
    StaleObservation,
    lift_of,
    sobol_init_points,
    weights_of,
)
from intentctl.bo.problems import (
    SYNTHETIC_ONE,
    SYNTHETIC_TWO,
    SyntheticProblem,
    get_problem,
    grid_optimum,
)

__all__ = [
    "LOG_FLOOR",
    "constrained_log_acquisition",
    "ei",
    "feasibility_prob",
    "log_ei",
    "log_feasibility",
    "pi",
    "ucb",
    "GpHyper",
    "GpModel",
    "SingularKernel",
    "gp_fit",
    "rbf_kernel",
    "NotStuck",
    "OptimizerConfig",
    "OptimizerState",
    "PreferenceOptimizer",
    "StaleObservation",
    "lift_of",
    "sobol_init_points",
    "weights_of",
    "SYNTHETIC_ONE",
    "SYNTHETIC_TWO",
    "SyntheticProblem",
    "get_problem",
    "grid_optimum",
]
