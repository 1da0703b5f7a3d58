"""Positive radial critical points of the Moser-Trudinger functional on the unit disk.

Shooting solver for the branch mu -> u_mu, its energy curve and supremum,
solution counts per energy level, and numerical checks of the blow-up
behaviour (bubble profile, second-order correction, decay, quantization).
"""
from .branch import (
    FOUR_PI,
    BranchCurve,
    BranchPoint,
    SolverControls,
    count_solutions,
    default_grid,
    find_lambda_sharp,
    solve_mu,
    sweep_branch,
)
from .ode_engine import RadialProfile, ShootConfig, integrate_profile

__all__ = [
    "FOUR_PI",
    "BranchCurve",
    "BranchPoint",
    "RadialProfile",
    "ShootConfig",
    "SolverControls",
    "count_solutions",
    "default_grid",
    "find_lambda_sharp",
    "integrate_profile",
    "solve_mu",
    "sweep_branch",
]
