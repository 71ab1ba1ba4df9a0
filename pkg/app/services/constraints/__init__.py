from app.services.constraints.barrier import verify_barrier
from app.services.constraints.divergence_fix import solve_divergence_fix
from app.services.constraints.elliptic import SchwarzSolver
from app.services.constraints.lichnerowicz import quadratic_remainder, solve_lichnerowicz
from app.services.constraints.symmetry import doubled_neck_check

__all__ = [
    "verify_barrier", "solve_divergence_fix", "SchwarzSolver",
    "quadratic_remainder", "solve_lichnerowicz", "doubled_neck_check",
]
