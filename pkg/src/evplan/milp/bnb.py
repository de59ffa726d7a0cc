"""Best-first branch-and-bound over binary variables."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time

import numpy as np

from .model import FEAS_TOL, INT_TOL, Model, ModelError, Solution, SolverError, Status
from .simplex import solve_lp

log = logging.getLogger(__name__)

BACKENDS = ("bnb", "highs")


def solve(
    model: Model,
    node_limit: int | None = None,
    time_limit: float | None = None,
    backend: str = "bnb",
) -> Solution:
    """Solve ``model`` to proven optimality unless a limit is hit first.

    Args:
        node_limit: maximum number of branch-and-bound nodes to evaluate.
        time_limit: wall-clock budget in seconds.
        backend: ``"bnb"`` for the built-in solver, ``"highs"`` to hand the
            model to SciPy's HiGHS MILP interface (for models too large for a
            dense tableau).

    Returns:
        A :class:`Solution`; on ``LIMIT_REACHED`` it carries the incumbent, if any.
    """
    if backend == "highs":
        from .highs import solve_highs

        return solve_highs(model, node_limit=node_limit, time_limit=time_limit)
    if backend != "bnb":
        raise ModelError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    return _BranchAndBound(model, node_limit, time_limit).run()


def check_feasible(model: Model) -> bool:
    """Phase-1 feasibility verdict for the continuous relaxation of ``model``."""
    A, senses, b = model.dense_rows()
    lb, ub = model.bounds()
    res = solve_lp(np.zeros(model.num_vars), A, senses, b, lb, ub, phase1_only=True)
    return res.status is Status.OPTIMAL


class _BranchAndBound:
    def __init__(self, model: Model, node_limit: int | None, time_limit: float | None) -> None:
        self.model = model
        self.node_limit = node_limit
        self.time_limit = time_limit
        self.A, self.senses, self.b = model.dense_rows()
        self.lb, self.ub = model.bounds()
        self.binary = np.nonzero(model.binary_mask())[0]
        obj = model.objective_vector()
        # internal form is minimization
        self.flip = -1.0 if model.sense == "max" else 1.0
        self.c = self.flip * obj
        self.best_x: np.ndarray | None = None
        self.best_val = math.inf
        self.nodes = 0

    def _lp(self, lb: np.ndarray, ub: np.ndarray):
        return solve_lp(self.c, self.A, self.senses, self.b, lb, ub)

    def _feasible(self, x: np.ndarray) -> bool:
        lhs = self.A @ x
        tol = FEAS_TOL * np.maximum(1.0, np.abs(self.b))
        for s, l, r, t in zip(self.senses, lhs, self.b, tol):
            if (s == "<=" and l > r + t) or (s == ">=" and l < r - t) or (s == "=" and abs(l - r) > t):
                return False
        return bool(np.all(x >= self.lb - FEAS_TOL) and np.all(x <= self.ub + FEAS_TOL))

    def _offer(self, x: np.ndarray) -> None:
        val = float(self.c @ x)
        if not math.isfinite(self.best_val) or val < self.best_val - 1e-12 * max(1.0, abs(self.best_val)):
            self.best_val = val
            self.best_x = x.copy()

    def _prunable(self, bound: float) -> bool:
        if not math.isfinite(self.best_val):
            return False
        return bound >= self.best_val - 1e-9 * max(1.0, abs(self.best_val))

    def run(self) -> Solution:
        start = time.perf_counter()
        counter = itertools.count()
        heap: list[tuple[float, int, np.ndarray, np.ndarray]] = [(-math.inf, next(counter), self.lb.copy(), self.ub.copy())]
        status = Status.OPTIMAL
        root_unbounded = False
        open_bound = -math.inf
        while heap:
            if self.node_limit is not None and self.nodes >= self.node_limit:
                status = Status.LIMIT_REACHED
                break
            if self.time_limit is not None and time.perf_counter() - start > self.time_limit:
                status = Status.LIMIT_REACHED
                break
            parent_bound, _, lb, ub = heapq.heappop(heap)
            if self._prunable(parent_bound):
                continue
            self.nodes += 1
            res = self._lp(lb, ub)
            if res.status is Status.INFEASIBLE:
                continue
            if res.status is Status.UNBOUNDED:
                if self.nodes == 1:
                    root_unbounded = True
                    break
                raise SolverError("relaxation became unbounded below the root")
            if self._prunable(res.objective):
                continue
            x = res.x
            frac = np.abs(x[self.binary] - np.round(x[self.binary]))
            if frac.size == 0 or frac.max() <= INT_TOL:
                x = x.copy()
                x[self.binary] = np.round(x[self.binary])
                self._offer(x)
                continue
            rounded = x.copy()
            rounded[self.binary] = np.round(rounded[self.binary])
            if self._feasible(rounded):
                self._offer(rounded)
            # most fractional; argmax returns the lowest index on ties
            k = int(np.argmax(frac))
            j = int(self.binary[k])
            for val in (1.0, 0.0):
                clb, cub = lb.copy(), ub.copy()
                clb[j] = cub[j] = val
                heapq.heappush(heap, (res.objective, next(counter), clb, cub))
        elapsed = time.perf_counter() - start
        names = self.model.var_names()
        if root_unbounded:
            return Solution(Status.UNBOUNDED, None, None, names, self.nodes, elapsed)
        if status is Status.OPTIMAL and self.best_x is None:
            return Solution(Status.INFEASIBLE, None, None, names, self.nodes, elapsed)
        if heap and status is Status.LIMIT_REACHED:
            open_bound = min(h[0] for h in heap)
            bound = min(open_bound, self.best_val)
        else:
            bound = self.best_val
        x = self._polish(self.best_x) if self.best_x is not None else None
        obj = self.model.evaluate(x) if x is not None else None
        model_bound = None if not math.isfinite(bound) else self.flip * bound + self.model.objective_constant
        if status is Status.OPTIMAL:
            model_bound = obj
        return Solution(status, obj, x, names, self.nodes, elapsed, model_bound)

    def _polish(self, x: np.ndarray) -> np.ndarray:
        """Fix binaries at their incumbent values and re-solve for clean continuous values."""
        if self.binary.size == x.size:
            return x
        lb, ub = self.lb.copy(), self.ub.copy()
        lb[self.binary] = ub[self.binary] = x[self.binary]
        res = self._lp(lb, ub)
        if res.status is Status.OPTIMAL and res.objective <= float(self.c @ x) + 1e-9 * max(1.0, abs(self.best_val)):
            return res.x
        return x
