"""Optional backend delegating to SciPy's HiGHS MILP solver."""

from __future__ import annotations

import math
import time

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .model import Model, Solution, SolverError, Status


def solve_highs(model: Model, node_limit: int | None = None, time_limit: float | None = None) -> Solution:
    start = time.perf_counter()
    names = model.var_names()
    flip = -1.0 if model.sense == "max" else 1.0
    c = flip * model.objective_vector()
    lb, ub = model.bounds()
    A, senses, b = model.sparse_rows()
    lo = np.where([s == "<=" for s in senses], -np.inf, b) if senses else np.zeros(0)
    hi = np.where([s == ">=" for s in senses], np.inf, b) if senses else np.zeros(0)
    constraints = [LinearConstraint(A, lo, hi)] if A.shape[0] else []
    options: dict = {"presolve": True}
    if node_limit is not None:
        options["node_limit"] = int(node_limit)
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    res = milp(
        c,
        integrality=model.binary_mask().astype(int),
        bounds=Bounds(lb, ub),
        constraints=constraints,
        options=options,
    )
    elapsed = time.perf_counter() - start
    x = None
    obj = None
    if res.x is not None:
        x = np.asarray(res.x, dtype=float)
        mask = model.binary_mask()
        x[mask] = np.round(x[mask])
        obj = model.evaluate(x)
    bound = None
    dual = getattr(res, "mip_dual_bound", None)
    if dual is not None and math.isfinite(dual):
        bound = flip * dual + model.objective_constant
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.status == 0:
        return Solution(Status.OPTIMAL, obj, x, names, nodes, elapsed, obj, backend="highs")
    if res.status == 1:
        return Solution(Status.LIMIT_REACHED, obj, x, names, nodes, elapsed, bound, backend="highs")
    if res.status == 2:
        return Solution(Status.INFEASIBLE, None, None, names, nodes, elapsed, backend="highs")
    if res.status == 3:
        return Solution(Status.UNBOUNDED, None, None, names, nodes, elapsed, backend="highs")
    raise SolverError(f"HiGHS failed: {res.message}")
