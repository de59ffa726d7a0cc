"""Solver-agnostic linear model container."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.sparse import csr_matrix

FEAS_TOL = 1e-7
INT_TOL = 1e-7


class ModelError(ValueError):
    """Malformed model: unknown variable, inconsistent bounds, bad sense."""


class SolverError(RuntimeError):
    """Numerical failure while solving a relaxation."""


class VarKind(str, enum.Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT_REACHED = "limit_reached"


SENSES = ("<=", "=", ">=")


@dataclass(frozen=True)
class Variable:
    name: str
    kind: VarKind = VarKind.CONTINUOUS
    lb: float = 0.0
    ub: float = math.inf


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[int, float]
    sense: str
    rhs: float
    name: str


class Model:
    """Linear objective and constraints over binary and continuous variables.

    Variables are addressed by index (returned from :meth:`add_var`) or by
    name. The objective sense is ``"max"`` or ``"min"``.
    """

    def __init__(self, name: str = "model", sense: str = "max") -> None:
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}
        self.objective_constant = 0.0
        self.sense = "max"
        self._by_name: dict[str, int] = {}
        self.set_sense(sense)

    def set_sense(self, sense: str) -> None:
        if sense not in ("max", "min"):
            raise ModelError(f"objective sense must be 'max' or 'min', got {sense!r}")
        self.sense = sense

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    def add_var(self, name: str, kind: VarKind | str = VarKind.CONTINUOUS, lb: float = 0.0, ub: float = math.inf) -> int:
        kind = VarKind(kind)
        if kind is VarKind.BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if name in self._by_name:
            raise ModelError(f"duplicate variable name {name!r}")
        if lb > ub:
            raise ModelError(f"variable {name!r}: lower bound {lb} exceeds upper bound {ub}")
        self._by_name[name] = len(self.variables)
        self.variables.append(Variable(name, kind, float(lb), float(ub)))
        return len(self.variables) - 1

    def add_binary(self, name: str) -> int:
        return self.add_var(name, VarKind.BINARY)

    def index(self, ref: int | str) -> int:
        if isinstance(ref, str):
            try:
                return self._by_name[ref]
            except KeyError:
                raise ModelError(f"unknown variable {ref!r}") from None
        if not 0 <= ref < len(self.variables):
            raise ModelError(f"variable index {ref} out of range")
        return int(ref)

    def _coeff_map(self, coeffs: Mapping[int | str, float]) -> dict[int, float]:
        out: dict[int, float] = {}
        for ref, a in coeffs.items():
            j = self.index(ref)
            out[j] = out.get(j, 0.0) + float(a)
        return out

    def add_constr(self, coeffs: Mapping[int | str, float], sense: str, rhs: float, name: str | None = None) -> int:
        if sense not in SENSES:
            raise ModelError(f"constraint sense must be one of {SENSES}, got {sense!r}")
        name = name or f"c{len(self.constraints) + 1}"
        self.constraints.append(Constraint(self._coeff_map(coeffs), sense, float(rhs), name))
        return len(self.constraints) - 1

    def set_objective(self, coeffs: Mapping[int | str, float], sense: str | None = None, constant: float = 0.0) -> None:
        if sense is not None:
            self.set_sense(sense)
        self.objective = self._coeff_map(coeffs)
        self.objective_constant = float(constant)

    def var_names(self) -> list[str]:
        return [v.name for v in self.variables]

    def binary_mask(self) -> np.ndarray:
        return np.array([v.kind is VarKind.BINARY for v in self.variables], dtype=bool)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        return lb, ub

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for j, a in self.objective.items():
            c[j] = a
        return c

    def dense_rows(self) -> tuple[np.ndarray, list[str], np.ndarray]:
        A = np.zeros((len(self.constraints), self.num_vars))
        for i, con in enumerate(self.constraints):
            for j, a in con.coeffs.items():
                A[i, j] = a
        return A, [con.sense for con in self.constraints], np.array([con.rhs for con in self.constraints])

    def sparse_rows(self) -> tuple[csr_matrix, list[str], np.ndarray]:
        rows, cols, vals = [], [], []
        for i, con in enumerate(self.constraints):
            for j, a in con.coeffs.items():
                rows.append(i)
                cols.append(j)
                vals.append(a)
        A = csr_matrix((vals, (rows, cols)), shape=(len(self.constraints), self.num_vars))
        return A, [con.sense for con in self.constraints], np.array([con.rhs for con in self.constraints])

    def evaluate(self, x: np.ndarray) -> float:
        return float(self.objective_vector() @ x) + self.objective_constant

    def violations(self, x: np.ndarray, tol: float = FEAS_TOL) -> list[str]:
        """Names of constraints, bounds or integrality conditions that ``x`` breaks."""
        bad = []
        lb, ub = self.bounds()
        for j, v in enumerate(self.variables):
            if x[j] < lb[j] - tol or x[j] > ub[j] + tol:
                bad.append(f"bound:{v.name}")
            if v.kind is VarKind.BINARY and abs(x[j] - round(x[j])) > INT_TOL:
                bad.append(f"integrality:{v.name}")
        for con in self.constraints:
            lhs = sum(a * x[j] for j, a in con.coeffs.items())
            scale = tol * max(1.0, abs(con.rhs))
            if (con.sense == "<=" and lhs > con.rhs + scale) or (
                con.sense == ">=" and lhs < con.rhs - scale
            ) or (con.sense == "=" and abs(lhs - con.rhs) > scale):
                bad.append(con.name)
        return bad


@dataclass
class Solution:
    """Result of :func:`evplan.milp.solve`.

    ``objective`` and ``x`` hold the incumbent (``None`` when no feasible
    point is known). ``bound`` is the best proven bound in the model's own
    sense, so ``gap`` is nonnegative and zero at optimality.
    """

    status: Status
    objective: float | None
    x: np.ndarray | None
    names: list[str]
    nodes: int = 0
    time: float = 0.0
    bound: float | None = None
    backend: str = "bnb"
    _lookup: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._lookup = {n: k for k, n in enumerate(self.names)}

    @property
    def gap(self) -> float | None:
        if self.objective is None or self.bound is None:
            return None
        return abs(self.bound - self.objective)

    def __getitem__(self, name: str) -> float:
        if self.x is None:
            raise KeyError(f"no assignment available (status {self.status.value})")
        return float(self.x[self._lookup[name]])

    def value(self, name: str, default: float = 0.0) -> float:
        if self.x is None or name not in self._lookup:
            return default
        return float(self.x[self._lookup[name]])
