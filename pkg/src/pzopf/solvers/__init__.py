from .enumeration import solve_enumeration
from .local import solve_local, solve_local_flapc
from .problem import OpfProblem, SolveResult
from .pso import PsoConfig, particle_scores, solve_apso, solve_pso, update_inertia, update_learning_factors

__all__ = [
    "OpfProblem", "SolveResult", "PsoConfig", "solve_local", "solve_local_flapc", "solve_pso",
    "solve_apso", "solve_enumeration", "update_inertia", "particle_scores", "update_learning_factors",
]
