"""Goal-augmented model predictive control."""

from .costs import (
    CostTerm,
    cooperation_cost,
    landing_gate,
    platform_tilt_cost,
    tracking_cost,
    uav_tilt_cost,
)
from .solver import CONVERGED, INFEASIBLE, MAX_ITERS, MpcProblem, MpcSolution, MpcSolver, MpcWeights, solve

__all__ = [
    "CONVERGED", "INFEASIBLE", "MAX_ITERS", "CostTerm", "MpcProblem", "MpcSolution", "MpcSolver",
    "MpcWeights", "cooperation_cost", "landing_gate", "platform_tilt_cost", "solve",
    "tracking_cost", "uav_tilt_cost",
]
