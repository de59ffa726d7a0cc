"""Dense two-phase primal simplex with implicit variable bounds.

Sized for desk-scale relaxations (a few thousand columns). Dantzig pricing
is used until a run of degenerate pivots is detected, then Bland's rule takes
over until the objective moves again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import FEAS_TOL, SolverError, Status

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
DEGENERATE_RUN = 50


@dataclass
class LPResult:
    status: Status
    x: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0


class _Tableau:
    """Working state for one simplex solve over ``0 <= z <= u`` and ``A z = b``."""

    def __init__(self, A: np.ndarray, b: np.ndarray, u: np.ndarray, basis: list[int]) -> None:
        self.T = A.copy()
        self.xB = b.copy()
        self.u = u
        self.basis = np.array(basis, dtype=int)
        self.at_upper = np.zeros(A.shape[1], dtype=bool)
        self.is_basic = np.zeros(A.shape[1], dtype=bool)
        self.is_basic[self.basis] = True
        self.iterations = 0

    def reduced_costs(self, c: np.ndarray) -> np.ndarray:
        return c - c[self.basis] @ self.T

    def pivot(self, r: int, j: int, d: np.ndarray) -> None:
        T = self.T
        piv = T[r, j]
        T[r] /= piv
        col = T[:, j].copy()
        col[r] = 0.0
        nz = np.nonzero(np.abs(col) > 0.0)[0]
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        d -= d[j] * T[r]
        leaving = self.basis[r]
        self.is_basic[leaving] = False
        self.is_basic[j] = True
        self.basis[r] = j
        self.at_upper[j] = False

    def run(self, c: np.ndarray, allowed: np.ndarray, max_iter: int) -> Status:
        """Minimize ``c @ z``; only columns in ``allowed`` may enter."""
        d = self.reduced_costs(c)
        bland = False
        degenerate = 0
        T, u = self.T, self.u
        while True:
            if self.iterations >= max_iter:
                raise SolverError(f"simplex iteration limit ({max_iter}) reached")
            movable = allowed & ~self.is_basic & (u > PIVOT_TOL)
            up = movable & ~self.at_upper & (d < -COST_TOL)
            down = movable & self.at_upper & (d > COST_TOL)
            cand = np.nonzero(up | down)[0]
            if cand.size == 0:
                return Status.OPTIMAL
            if bland:
                j = int(cand[0])
            else:
                j = int(cand[np.argmax(np.abs(d[cand]))])
            s = 1.0 if up[j] else -1.0
            alpha = T[:, j]
            rate = -s * alpha
            theta = u[j]
            leave = -1
            leave_to_upper = False
            uB = u[self.basis]
            dec = rate < -PIVOT_TOL
            if dec.any():
                idx = np.nonzero(dec)[0]
                lim = np.maximum(self.xB[idx], 0.0) / -rate[idx]
                k = _argmin_bland(lim, self.basis[idx], bland)
                if lim[k] < theta:
                    theta, leave, leave_to_upper = lim[k], int(idx[k]), False
            inc = (rate > PIVOT_TOL) & np.isfinite(uB)
            if inc.any():
                idx = np.nonzero(inc)[0]
                lim = np.maximum(uB[idx] - self.xB[idx], 0.0) / rate[idx]
                k = _argmin_bland(lim, self.basis[idx], bland)
                if lim[k] < theta or (bland and leave >= 0 and lim[k] == theta and self.basis[idx[k]] < self.basis[leave]):
                    theta, leave, leave_to_upper = lim[k], int(idx[k]), True
            if not math.isfinite(theta):
                return Status.UNBOUNDED
            self.iterations += 1
            if theta <= PIVOT_TOL:
                degenerate += 1
                if degenerate >= DEGENERATE_RUN:
                    bland = True
            else:
                degenerate = 0
                bland = False
            self.xB += rate * theta
            if leave < 0:
                # bound flip: the entering column crosses to its other bound
                self.at_upper[j] = not self.at_upper[j]
                continue
            entering_value = theta if s > 0 else u[j] - theta
            leaving = self.basis[leave]
            self.pivot(leave, j, d)
            self.at_upper[leaving] = leave_to_upper
            self.xB[leave] = entering_value

    def values(self) -> np.ndarray:
        z = np.where(self.at_upper, self.u, 0.0)
        z[self.basis] = self.xB
        return z


def _argmin_bland(lim: np.ndarray, names: np.ndarray, bland: bool) -> int:
    if not bland:
        return int(np.argmin(lim))
    m = lim.min()
    ties = np.nonzero(lim <= m + PIVOT_TOL)[0]
    return int(ties[np.argmin(names[ties])])


def solve_lp(
    c: np.ndarray,
    A: np.ndarray,
    senses: list[str],
    b: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    *,
    phase1_only: bool = False,
    max_iter: int | None = None,
) -> LPResult:
    """Minimize ``c @ x`` subject to row constraints and ``lb <= x <= ub``.

    Args:
        senses: one of ``"<="``, ``"="``, ``">="`` per row of ``A``.
        phase1_only: stop after establishing feasibility (the returned ``x``
            is feasible but not optimized).

    Returns:
        LPResult with status OPTIMAL, INFEASIBLE or UNBOUNDED.
    """
    n = A.shape[1]
    # column map: x = offset + M @ z with z >= 0
    cols: list[tuple[int, float]] = []
    upper: list[float] = []
    offset = np.zeros(n)
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if lo > hi + FEAS_TOL:
            return LPResult(Status.INFEASIBLE)
        if math.isfinite(lo) and math.isfinite(hi) and hi - lo <= FEAS_TOL:
            offset[j] = lo
            continue
        if math.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            upper.append(hi - lo)
        elif math.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
            upper.append(math.inf)
        else:
            cols.append((j, 1.0))
            upper.append(math.inf)
            cols.append((j, -1.0))
            upper.append(math.inf)
    nz = len(cols)
    M = np.zeros((n, nz))
    for k, (j, sgn) in enumerate(cols):
        M[j, k] = sgn
    Az = A @ M
    rhs = b - A @ offset
    cz = c @ M

    rows_keep = []
    for i in range(A.shape[0]):
        if np.any(np.abs(Az[i]) > 0.0):
            rows_keep.append(i)
            continue
        s, r = senses[i], rhs[i]
        tol = FEAS_TOL * max(1.0, abs(b[i]))
        if (s == "<=" and r < -tol) or (s == ">=" and r > tol) or (s == "=" and abs(r) > tol):
            return LPResult(Status.INFEASIBLE)
    Az = Az[rows_keep]
    rhs = rhs[rows_keep]
    senses = [senses[i] for i in rows_keep]
    m = len(rows_keep)

    if m == 0:
        z = np.where(cz < 0, np.array(upper), 0.0)
        if np.any(~np.isfinite(z)):
            return LPResult(Status.UNBOUNDED)
        x = offset + M @ z
        return LPResult(Status.OPTIMAL, x, float(c @ x))

    n_slack = sum(1 for s in senses if s != "=")
    full = np.zeros((m, nz + n_slack))
    full[:, :nz] = Az
    u_full = np.concatenate([np.array(upper, dtype=float), np.full(n_slack, math.inf)])
    slack_of_row = [-1] * m
    k = nz
    for i, s in enumerate(senses):
        if s == "<=":
            full[i, k] = 1.0
        elif s == ">=":
            full[i, k] = -1.0
        if s != "=":
            slack_of_row[i] = k
            k += 1
    neg = rhs < 0
    full[neg] *= -1.0
    rhs = np.abs(rhs)

    basis = [-1] * m
    art_rows = []
    for i in range(m):
        sc = slack_of_row[i]
        if sc >= 0 and full[i, sc] > 0:
            basis[i] = sc
        else:
            art_rows.append(i)
    n_art = len(art_rows)
    ncol = full.shape[1] + n_art
    work = np.zeros((m, ncol))
    work[:, : full.shape[1]] = full
    for a, i in enumerate(art_rows):
        work[i, full.shape[1] + a] = 1.0
        basis[i] = full.shape[1] + a
    u_work = np.concatenate([u_full, np.full(n_art, math.inf)])
    max_iter = max_iter or 50 * (m + ncol) + 1000

    tab = _Tableau(work, rhs, u_work, basis)
    real = np.zeros(ncol, dtype=bool)
    real[: full.shape[1]] = True
    if n_art:
        c1 = np.zeros(ncol)
        c1[full.shape[1]:] = 1.0
        tab.run(c1, np.ones(ncol, dtype=bool), max_iter)
        infeas = float(np.sum(tab.values()[full.shape[1]:]))
        if infeas > FEAS_TOL * max(1.0, float(np.max(rhs))):
            return LPResult(Status.INFEASIBLE, iterations=tab.iterations)
        _drive_out_artificials(tab, real)
    if phase1_only:
        z = tab.values()[:nz]
        x = offset + M @ z
        return LPResult(Status.OPTIMAL, x, float(c @ x), tab.iterations)

    c2 = np.zeros(tab.T.shape[1])
    c2[:nz] = cz
    allowed = np.zeros(tab.T.shape[1], dtype=bool)
    allowed[: full.shape[1]] = True
    status = tab.run(c2, allowed, max_iter)
    if status is Status.UNBOUNDED:
        return LPResult(Status.UNBOUNDED, iterations=tab.iterations)
    z = _refine(tab, full, rhs, u_full)
    x = offset + M @ z[:nz]
    return LPResult(Status.OPTIMAL, x, float(c @ x), tab.iterations)


def _drive_out_artificials(tab: _Tableau, real: np.ndarray) -> None:
    r = 0
    while r < len(tab.basis):
        j = tab.basis[r]
        if j < real.size and real[j]:
            r += 1
            continue
        row = tab.T[r]
        cand = np.nonzero(real & ~tab.is_basic & (np.abs(row) > 1e-7))[0]
        if cand.size:
            k = int(cand[np.argmax(np.abs(row[cand]))])
            value = tab.u[k] if tab.at_upper[k] else 0.0
            dummy = np.zeros(tab.T.shape[1])
            tab.pivot(r, k, dummy)
            tab.at_upper[j] = False
            tab.xB[r] = value
            r += 1
        else:
            # redundant row
            tab.is_basic[j] = False
            keep = np.arange(len(tab.basis)) != r
            tab.T = tab.T[keep]
            tab.xB = tab.xB[keep]
            tab.basis = tab.basis[keep]


def _refine(tab: _Tableau, full: np.ndarray, rhs: np.ndarray, u_full: np.ndarray) -> np.ndarray:
    """Recompute basic values from the original rows to shed accumulated pivot error."""
    ncol = full.shape[1]
    z = tab.values()[:ncol].copy()
    basis = tab.basis
    if np.any(basis >= ncol) or len(basis) != full.shape[0]:
        return z
    B = full[:, basis]
    nonbasic = np.ones(ncol, dtype=bool)
    nonbasic[basis] = False
    r = rhs - full[:, nonbasic] @ z[nonbasic]
    try:
        zb = np.linalg.solve(B, r)
    except np.linalg.LinAlgError:
        return z
    ub = u_full[basis]
    if np.all(zb >= -FEAS_TOL) and np.all(zb <= ub + FEAS_TOL):
        z[basis] = np.clip(zb, 0.0, ub)
    return z
