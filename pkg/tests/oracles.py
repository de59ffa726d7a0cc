"""Brute-force reference solvers used to check the optimizers."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog

from evplan.candgen import EndpointCatalog
from evplan.milp import Model, VarKind
from evplan.netcore import point_distance


def enumerate_milp(model: Model) -> float | None:
    """Optimal objective by trying every binary assignment.

    Continuous variables (if any) are optimized per assignment with SciPy's
    LP solver; pure-binary models are evaluated in one vectorized pass.
    Returns ``None`` when infeasible.
    """
    A, senses, b = model.dense_rows()
    c = model.objective_vector()
    lb, ub = model.bounds()
    kinds = [v.kind for v in model.variables]
    bins = [j for j, k in enumerate(kinds) if k is VarKind.BINARY]
    conts = [j for j, k in enumerate(kinds) if k is VarKind.CONTINUOUS]
    sign = 1.0 if model.sense == "max" else -1.0
    grid = np.array(list(itertools.product((0.0, 1.0), repeat=len(bins))))
    grid = grid[np.all((grid >= lb[bins]) & (grid <= ub[bins]), axis=1)] if bins else np.zeros((1, 0))
    if not conts:
        lhs = grid @ A[:, bins].T if A.size else np.zeros((len(grid), 0))
        ok = np.ones(len(grid), dtype=bool)
        for i, s in enumerate(senses):
            if s == "<=":
                ok &= lhs[:, i] <= b[i] + 1e-9
            elif s == ">=":
                ok &= lhs[:, i] >= b[i] - 1e-9
            else:
                ok &= np.abs(lhs[:, i] - b[i]) <= 1e-9
        if not ok.any():
            return None
        vals = grid[ok] @ c[bins]
        best = vals.max() if sign > 0 else vals.min()
        return float(best) + model.objective_constant
    best = None
    Ac = A[:, conts]
    le = [i for i, s in enumerate(senses) if s == "<="]
    ge = [i for i, s in enumerate(senses) if s == ">="]
    eq = [i for i, s in enumerate(senses) if s == "="]
    for xb in grid:
        rest = b - (A[:, bins] @ xb if bins else 0.0)
        A_ub = np.vstack([Ac[le], -Ac[ge]]) if le or ge else None
        b_ub = np.concatenate([rest[le], -rest[ge]]) if le or ge else None
        res = linprog(
            -sign * c[conts],
            A_ub=A_ub,
            b_ub=b_ub,
            A_eq=Ac[eq] if eq else None,
            b_eq=rest[eq] if eq else None,
            bounds=list(zip(lb[conts], [None if math.isinf(u) else u for u in ub[conts]])),
            method="highs",
        )
        if res.status != 0:
            continue
        val = float(c[bins] @ xb) + sign * -res.fun
        if best is None or sign * val > sign * best:
            best = val
    return None if best is None else best + model.objective_constant


def stage1_brute(catalog: EndpointCatalog, mu: dict, c_f: float, B_f: float) -> float:
    """Best weighted coverage over every affordable endpoint subset."""
    n = len(catalog.endpoints)
    cap = int(math.floor(B_f / c_f + 1e-9))
    weights = np.array([(1.0 + mu[q]) * q.flow for q in catalog.pairs])
    best = 0.0
    for k in range(0, min(cap, n) + 1):
        for subset in itertools.combinations(range(n), k):
            covered = catalog.matrix[list(subset)].any(axis=0) if subset else np.zeros(len(catalog.pairs), dtype=bool)
            best = max(best, float(weights[covered].sum()))
    return best


def stage2_brute(sets, catalog: EndpointCatalog, tensor, scenario_set, mu_q: dict, table, config) -> float:
    """Best schedule value over every unit-by-period assignment.

    Coverage, per-period values and distances are recomputed here from the
    raw catalog, flow tensor and distance table, independently of the model
    builder.
    """
    net = catalog.network
    ids = sets.n
    n_f, n_m = set(sets.n_f), set(sets.n_m)
    T, M = scenario_set.periods, config.fleet
    cap = int(math.floor(config.B_m / config.c_m + 1e-9))
    P = np.array([s.probability for s in scenario_set.scenarios])
    lam = config.relocation * float(P.sum())
    col = {q.key: k for k, q in enumerate(catalog.pairs)}
    row = {ep.id: w for w, ep in enumerate(catalog.endpoints)}
    covers_q = {w: {q.key for q in sets.q_m if catalog.matrix[row[w], col[q.key]]} for w in sets.n_m}
    value = {}
    for q in sets.q_m:
        k = tensor.index[q.key]
        for t in range(T):
            exp = sum(P[s] * tensor.flows[t, s, k] for s in range(len(P)))
            value[t, q.key] = config.benefit * (1.0 + mu_q[q]) * exp
    dist = {(a, b): point_distance(net, table, sets.points[a], sets.points[b]) for a in ids for b in ids}
    best = 0.0
    for flat in itertools.product([None, *ids], repeat=T * M):
        a = [flat[t * M:(t + 1) * M] for t in range(T)]
        ok = True
        active = set()
        for m in range(M):
            for t in range(T):
                if a[t][m] in n_m:
                    active.add(m)
                    if t + 1 < T and a[t + 1][m] not in n_f:
                        ok = False
        if not ok or len(active) > cap:
            continue
        val = 0.0
        for t in range(T):
            hit = set()
            for w in a[t]:
                if w in n_m:
                    hit |= covers_q[w]
            val += sum(value[t, key] for key in hit)
        for t in range(T - 1):
            for m in range(M):
                w, w2 = a[t][m], a[t + 1][m]
                if w is not None and w2 is not None:
                    val -= lam * dist[w, w2]
        best = max(best, val)
    return best


def random_model(rng: np.random.Generator, n_bin: int, n_cont: int = 0, n_rows: int | None = None) -> Model:
    """Random bounded MILP with integer coefficients and mixed constraint senses."""
    m = Model("rand", sense=str(rng.choice(["max", "min"])))
    for j in range(n_bin):
        m.add_binary(f"x{j}")
    for j in range(n_cont):
        m.add_var(f"z{j}", lb=0.0, ub=float(rng.integers(1, 6)))
    n = n_bin + n_cont
    rows = int(rng.integers(2, 7)) if n_rows is None else n_rows
    for i in range(rows):
        coeffs = {j: float(rng.integers(-3, 8)) for j in range(n) if rng.random() < 0.6}
        if not coeffs:
            coeffs = {int(rng.integers(n)): 1.0}
        total = sum(max(a, 0.0) for a in coeffs.values())
        sense = str(rng.choice(["<=", "<=", ">=", "="]))
        if sense == "<=":
            rhs = float(rng.integers(0, int(total) + 2))
        elif sense == ">=":
            rhs = float(rng.integers(-2, max(1, int(total // 2))))
        else:
            rhs = float(rng.integers(0, 4))
        m.add_constr(coeffs, sense, rhs, f"r{i}")
    m.set_objective({j: float(rng.integers(-5, 10)) for j in range(n)})
    return m
