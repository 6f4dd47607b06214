"""Linear programming core: containers, solvers and constraint builders."""

from .chain import (
    Plan,
    SubproblemInfeasibleError,
    launch_costs,
    relieve_power_ceiling,
    solve_chain,
    solve_linear_plan,
)
from .feasible import (
    FeasibleSet,
    InfeasibleBoxError,
    assemble_feasible_set,
    expected_levels,
    phi_lower_bound,
    phi_vector,
)
from .instance import FEAS_TOL, OPT_TOL, LpInstance, LpSolution, LpStatus, dual_bound, write_lp_file
from .operators import PsiOperator, build_omega, build_upsilon
from .simplex import simplex_solve
from .solve import solve_lp

__all__ = [
    "FEAS_TOL", "OPT_TOL", "FeasibleSet", "InfeasibleBoxError", "LpInstance", "LpSolution",
    "LpStatus", "Plan", "PsiOperator", "SubproblemInfeasibleError", "assemble_feasible_set",
    "build_omega", "build_upsilon", "dual_bound", "expected_levels", "launch_costs",
    "phi_lower_bound", "phi_vector", "relieve_power_ceiling", "simplex_solve", "solve_chain", "solve_linear_plan",
    "solve_lp", "write_lp_file",
]
