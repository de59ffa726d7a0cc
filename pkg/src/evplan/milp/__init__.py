"""Mixed-integer linear models, a built-in branch-and-bound solver and LP-format I/O."""

from .bnb import BACKENDS, check_feasible, solve
from .lpformat import export_lp, parse_lp, read_lp, write_lp
from .model import (
    FEAS_TOL,
    INT_TOL,
    Constraint,
    Model,
    ModelError,
    Solution,
    SolverError,
    Status,
    Variable,
    VarKind,
)

__all__ = [
    "BACKENDS",
    "FEAS_TOL",
    "INT_TOL",
    "Constraint",
    "Model",
    "ModelError",
    "Solution",
    "SolverError",
    "Status",
    "Variable",
    "VarKind",
    "check_feasible",
    "export_lp",
    "parse_lp",
    "read_lp",
    "solve",
    "write_lp",
]
