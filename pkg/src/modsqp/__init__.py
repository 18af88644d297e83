"""Sequential quadratic programming with swappable components.

The default configuration pairs a damped BFGS Hessian approximation, a dense
dual active-set QP solver with an elastic fallback for inconsistent
linearizations, and a strong Wolfe line search on a smooth augmented
Lagrangian merit function.
"""

from .driver import SolveReport, SolverOptions, SolveStatus, check_convergence, solve
from .problem import (
    Constraint,
    EvaluationError,
    EvaluationFailure,
    InvalidSpec,
    ProblemSpec,
    StandardProblem,
    canonicalize,
    evaluate,
)
from .qpcore import QPData, QPSolution, QPStatus, solve_qp

__all__ = [
    "Constraint",
    "EvaluationError",
    "EvaluationFailure",
    "InvalidSpec",
    "ProblemSpec",
    "QPData",
    "QPSolution",
    "QPStatus",
    "SolveReport",
    "SolveStatus",
    "SolverOptions",
    "StandardProblem",
    "canonicalize",
    "check_convergence",
    "evaluate",
    "solve",
    "solve_qp",
]
