"""Fixed-station placement (stage 1) and mobile-station scheduling (stage 2)."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .candgen import EndpointCatalog, ExistingStation
from .milp import Model, Solution, Status, solve
from .milp.lpformat import lp_name
from .netcore import DistanceTable, Network, NetworkPoint, ODPair, point_distance
from .scenario import FlowTensor, ScenarioSet

log = logging.getLogger(__name__)

OBJ_TOL = 1e-6


class PlanError(ValueError):
    pass


class ConsistencyError(RuntimeError):
    """A solver result disagrees with the quantities re-derived from it."""


class Mode(str, enum.Enum):
    SERVE = "Serve"
    CHARGE = "Charge"
    IDLE = "Idle"


@dataclass(frozen=True)
class Stage1Config:
    c_f: float = 1.0
    B_f: float = 10.0

    def __post_init__(self) -> None:
        if not self.c_f > 0:
            raise PlanError(f"station cost must be positive, got {self.c_f}")
        if not self.B_f >= 0:
            raise PlanError(f"station budget must be nonnegative, got {self.B_f}")

    @property
    def max_stations(self) -> int:
        return int(math.floor(self.B_f / self.c_f + 1e-9))


@dataclass(frozen=True)
class Stage2Config:
    """Economics of the mobile fleet.

    Attributes:
        benefit: value per unit of served flow per period ($).
        relocation: cost per mile moved between consecutive periods ($).
        c_m: activation cost per unit.
        B_m: activation budget.
        fleet: number of available units |M|.
    """

    benefit: float = 10.0
    relocation: float = 20.0
    c_m: float = 1.0
    B_m: float = 10.0
    fleet: int = 10

    def __post_init__(self) -> None:
        if self.benefit < 0 or self.relocation <= 0 or self.c_m <= 0 or self.B_m < 0:
            raise PlanError("stage-2 rates must be nonnegative and relocation/unit costs positive")
        if self.fleet < 1:
            raise PlanError(f"fleet size must be at least 1, got {self.fleet}")

    @property
    def max_active(self) -> int:
        return int(math.floor(self.B_m / self.c_m + 1e-9))


def _pair_var(q: ODPair) -> str:
    return f"{q.origin}_{q.destination}"


# --------------------------------------------------------------------------- stage 1


@dataclass
class Stage1Problem:
    model: Model
    catalog: EndpointCatalog
    flows: dict[ODPair, float]
    mu_q: dict[ODPair, float]
    config: Stage1Config
    x_vars: list[int]
    y_vars: list[int]


@dataclass
class FcsPlan:
    selected: list[str]
    covered: list[ODPair]
    objective: float
    zone_counts: dict[str, int]
    status: Status = Status.OPTIMAL
    solver_objective: float | None = None
    cost: float = 0.0


def _weights(pairs: Sequence[ODPair], flows: Mapping[ODPair, float] | None, mu_q: Mapping[ODPair, float]):
    f = {q: float(q.flow if flows is None else flows[q]) for q in pairs}
    missing = [q.label() for q in pairs if q not in mu_q]
    if missing:
        raise PlanError(f"no equity weight for {missing[0]}")
    return f, {q: float(mu_q[q]) for q in pairs}


def build_stage1(
    catalog: EndpointCatalog,
    flows: Mapping[ODPair, float] | None,
    mu_q: Mapping[ODPair, float],
    config: Stage1Config,
) -> Stage1Problem:
    """Weighted max-coverage model over the catalog endpoints.

    Maximizes sum (1 + mu_q) f(q) y_q subject to coverage (y_q only if some
    selected endpoint covers q) and the station budget.
    """
    pairs = catalog.pairs
    if not pairs:
        log.warning("no uncovered O-D pairs; stage-1 model is trivially empty")
    f, mu = _weights(pairs, flows, mu_q)
    m = Model("fcs_placement", sense="max")
    xs = [m.add_binary(f"x_{lp_name(ep.id)}") for ep in catalog.endpoints]
    ys = [m.add_binary(f"y_{lp_name(_pair_var(q))}") for q in pairs]
    m.set_objective({ys[k]: (1.0 + mu[q]) * f[q] for k, q in enumerate(pairs)})
    for k, q in enumerate(pairs):
        cover = {xs[w]: 1.0 for w in np.nonzero(catalog.matrix[:, k])[0]}
        cover[ys[k]] = -1.0
        m.add_constr(cover, ">=", 0.0, f"cover_{lp_name(_pair_var(q))}")
    m.add_constr({x: config.c_f for x in xs}, "<=", config.B_f, "budget")
    return Stage1Problem(m, catalog, f, mu, config, xs, ys)


def solve_stage1(
    problem: Stage1Problem,
    backend: str = "bnb",
    node_limit: int | None = None,
    time_limit: float | None = None,
) -> FcsPlan:
    """Solve the placement model; coverage is re-derived from the selected endpoints."""
    sol = solve(problem.model, node_limit=node_limit, time_limit=time_limit, backend=backend)
    if sol.x is None:
        if sol.status is Status.LIMIT_REACHED:
            return FcsPlan([], [], 0.0, {z: 0 for z in problem.catalog.network.zones}, sol.status)
        raise PlanError(f"stage-1 solve ended with status {sol.status.value}")
    cat = problem.catalog
    chosen = [w for w, j in enumerate(problem.x_vars) if sol.x[j] > 0.5]
    covered_mask = cat.matrix[chosen].any(axis=0) if chosen else np.zeros(len(cat.pairs), dtype=bool)
    covered = [q for k, q in enumerate(cat.pairs) if covered_mask[k]]
    objective = sum((1.0 + problem.mu_q[q]) * problem.flows[q] for q in covered)
    if sol.status is Status.OPTIMAL and sol.objective is not None:
        if objective < sol.objective - OBJ_TOL * max(1.0, abs(sol.objective)):
            raise ConsistencyError("re-derived coverage lost objective value")
    zones = {z: 0 for z in cat.network.zones}
    for w in chosen:
        zones[cat.endpoints[w].location.zone(cat.network)] += 1
    return FcsPlan(
        [cat.endpoints[w].id for w in chosen],
        covered,
        float(objective),
        zones,
        sol.status,
        sol.objective,
        problem.config.c_f * len(chosen),
    )


# --------------------------------------------------------------------------- inter-stage sets


@dataclass
class StageSets:
    """Addressable points after stage 1.

    ``points`` maps point ids (existing station ids and endpoint ids) to
    locations; ``n_f`` holds stations (existing plus newly selected), ``n_m``
    the remaining endpoints, and ``q_m`` the pairs no station covers.
    """

    points: dict[str, NetworkPoint]
    n_f: list[str]
    n_m: list[str]
    q_m: list[ODPair]
    existing: list[str] = field(default_factory=list)

    @property
    def n(self) -> list[str]:
        return list(self.points)


def derive_sets(plan: FcsPlan, stations: Sequence[ExistingStation], catalog: EndpointCatalog) -> StageSets:
    points: dict[str, NetworkPoint] = {}
    for u in stations:
        if u.id in points:
            raise PlanError(f"duplicate station id {u.id!r}")
        points[u.id] = u.location
    for ep in catalog.endpoints:
        if ep.id in points:
            raise PlanError(f"endpoint id {ep.id!r} collides with an existing station id")
        points[ep.id] = ep.location
    selected = set(plan.selected)
    unknown = selected - {ep.id for ep in catalog.endpoints}
    if unknown:
        raise PlanError(f"plan selects unknown endpoint {sorted(unknown)[0]!r}")
    n_f = [u.id for u in stations] + [ep.id for ep in catalog.endpoints if ep.id in selected]
    n_m = [ep.id for ep in catalog.endpoints if ep.id not in selected]
    covered = set(plan.covered)
    q_m = [q for q in catalog.pairs if q not in covered]
    return StageSets(points, n_f, n_m, q_m, [u.id for u in stations])


# --------------------------------------------------------------------------- stage 2


@dataclass
class Stage2Problem:
    model: Model
    sets: StageSets
    config: Stage2Config
    scenarios: ScenarioSet
    distances: np.ndarray  # over sets.n x sets.n
    coverage: np.ndarray  # bool, n_m x q_m
    served_value: np.ndarray  # (T, |Q_m|): expected benefit of serving q in t
    k: dict[tuple[int, int, str], int]
    y: dict[tuple[int, int], int]
    r: dict[tuple[int, int, str, str], int]
    phi: list[int]
    network: Network

    @property
    def periods(self) -> int:
        return self.scenarios.periods

    @property
    def relocation_weight(self) -> float:
        """Per-mile cost of a move: lambda times the total scenario probability."""
        return self.config.relocation * self.scenarios.probability_mass


def point_distances(catalog: EndpointCatalog, table: DistanceTable, sets: StageSets) -> np.ndarray:
    ids = sets.n
    n = len(ids)
    D = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            D[a, b] = D[b, a] = point_distance(catalog.network, table, sets.points[ids[a]], sets.points[ids[b]])
    return D


def build_stage2(
    sets: StageSets,
    catalog: EndpointCatalog,
    tensor: FlowTensor,
    scenario_set: ScenarioSet,
    mu_q: Mapping[ODPair, float],
    table: DistanceTable,
    config: Stage2Config,
) -> Stage2Problem:
    """Expected-benefit scheduling model for the mobile fleet.

    Variables: ``k`` (unit m at point w in period t, over all points),
    ``y`` (pair served in period t), ``r`` (move from w to w' between t and
    t+1) and ``phi`` (unit activated). Serving credit counts only points in
    ``n_m``; a unit that serves must sit at a station in the next period.
    """
    T = scenario_set.periods
    if tensor.flows.shape[:2] != (T, len(scenario_set.scenarios)):
        raise PlanError(f"flow tensor shape {tensor.flows.shape} does not match {T} periods x {len(scenario_set.scenarios)} scenarios")
    if not sets.q_m:
        log.warning("every O-D pair is covered by a fixed station; the mobile fleet has nothing to serve")
    for q in sets.q_m:
        if q.key not in tensor.index:
            raise PlanError(f"flow tensor lacks pair {q.label()}")
        if q not in mu_q:
            raise PlanError(f"no equity weight for {q.label()}")

    ids = sets.n
    pos = {w: a for a, w in enumerate(ids)}
    D = point_distances(catalog, table, sets)
    ep_row = {ep.id: w for w, ep in enumerate(catalog.endpoints)}
    pair_col = {q: k for k, q in enumerate(catalog.pairs)}
    cov = np.zeros((len(sets.n_m), len(sets.q_m)), dtype=bool)
    for a, w in enumerate(sets.n_m):
        for b, q in enumerate(sets.q_m):
            cov[a, b] = bool(catalog.matrix[ep_row[w], pair_col[q]])

    P = scenario_set.probabilities
    value = np.zeros((T, len(sets.q_m)))
    for b, q in enumerate(sets.q_m):
        kq = tensor.index[q.key]
        value[:, b] = config.benefit * (1.0 + float(mu_q[q])) * (tensor.flows[:, :, kq] @ P)

    M = config.fleet
    mdl = Model("mcs_schedule", sense="max")
    names = {w: lp_name(w) for w in ids}
    k_var: dict[tuple[int, int, str], int] = {}
    for t in range(T):
        for m in range(M):
            for w in ids:
                k_var[t, m, w] = mdl.add_binary(f"k_{t + 1}_{m + 1}_{names[w]}")
    y_var: dict[tuple[int, int], int] = {}
    for t in range(T):
        for b, q in enumerate(sets.q_m):
            y_var[t, b] = mdl.add_binary(f"y_{t + 1}_{lp_name(_pair_var(q))}")
    r_var: dict[tuple[int, int, str, str], int] = {}
    for t in range(T - 1):
        for m in range(M):
            for w in ids:
                for w2 in ids:
                    r_var[t, m, w, w2] = mdl.add_binary(f"r_{t + 1}_{m + 1}_{names[w]}_{names[w2]}")
    phi = [mdl.add_binary(f"phi_{m + 1}") for m in range(M)]

    obj: dict[int, float] = {}
    for (t, b), j in y_var.items():
        obj[j] = float(value[t, b])
    lam = config.relocation * scenario_set.probability_mass
    for (t, m, w, w2), j in r_var.items():
        d = D[pos[w], pos[w2]]
        if d:
            obj[j] = -lam * d
    mdl.set_objective(obj)

    for t in range(T):
        for b, q in enumerate(sets.q_m):
            row = {k_var[t, m, w]: 1.0 for m in range(M) for a, w in enumerate(sets.n_m) if cov[a, b]}
            row[y_var[t, b]] = -1.0
            mdl.add_constr(row, ">=", 0.0, f"serve_{t + 1}_{lp_name(_pair_var(q))}")
    for t in range(T):
        for m in range(M):
            mdl.add_constr({k_var[t, m, w]: 1.0 for w in ids}, "<=", 1.0, f"one_{t + 1}_{m + 1}")
    for (t, m, w, w2), j in r_var.items():
        mdl.add_constr(
            {j: 1.0, k_var[t, m, w]: -1.0, k_var[t + 1, m, w2]: -1.0},
            ">=",
            -1.0,
            f"move_{t + 1}_{m + 1}_{names[w]}_{names[w2]}",
        )
    for t in range(T - 1):
        for m in range(M):
            row = {k_var[t + 1, m, w]: 1.0 for w in sets.n_f}
            for w in sets.n_m:
                row[k_var[t, m, w]] = row.get(k_var[t, m, w], 0.0) - 1.0
            mdl.add_constr(row, ">=", 0.0, f"recharge_{t + 1}_{m + 1}")
    for m in range(M):
        for t in range(T):
            for w in sets.n_m:
                mdl.add_constr({phi[m]: 1.0, k_var[t, m, w]: -1.0}, ">=", 0.0, f"act_{t + 1}_{m + 1}_{names[w]}")
    mdl.add_constr({p: config.c_m for p in phi}, "<=", config.B_m, "fleet_budget")
    return Stage2Problem(mdl, sets, config, scenario_set, D, cov, value, k_var, y_var, r_var, phi, catalog.network)


@dataclass(frozen=True)
class Relocation:
    period: int  # move happens between period and period + 1 (0-based)
    unit: int
    origin: str
    target: str
    miles: float


@dataclass
class McsSchedule:
    """Extracted mobile-fleet schedule.

    ``assignment[t][m]`` is the point id of unit ``m`` in period ``t`` (or
    ``None`` when idle); periods and units are 0-based here and 1-based in
    exported files.
    """

    assignment: list[list[str | None]]
    modes: list[list[Mode]]
    served: list[list[ODPair]]
    relocations: list[Relocation]
    activated: list[int]
    benefit: float
    relocation_cost: float
    objective: float
    status: Status = Status.OPTIMAL
    solver_objective: float | None = None

    @property
    def periods(self) -> int:
        return len(self.assignment)

    @property
    def fleet(self) -> int:
        return len(self.assignment[0]) if self.assignment else 0


def schedule_from_assignment(problem: Stage2Problem, assignment: list[list[str | None]]) -> McsSchedule:
    """Modes, coverage, moves and totals implied by a unit-by-period assignment."""
    sets = problem.sets
    n_m = set(sets.n_m)
    n_f = set(sets.n_f)
    m_pos = {w: a for a, w in enumerate(sets.n_m)}
    pos = {w: a for a, w in enumerate(sets.n)}
    T = len(assignment)
    M = len(assignment[0]) if T else 0
    modes = []
    served = []
    benefit = 0.0
    for t in range(T):
        row = []
        hit = np.zeros(len(sets.q_m), dtype=bool)
        for w in assignment[t]:
            if w is None:
                row.append(Mode.IDLE)
            elif w in n_m:
                row.append(Mode.SERVE)
                hit |= problem.coverage[m_pos[w]]
            elif w in n_f:
                row.append(Mode.CHARGE)
            else:
                raise PlanError(f"unknown point {w!r} in assignment")
        modes.append(row)
        served.append([q for b, q in enumerate(sets.q_m) if hit[b]])
        benefit += float(problem.served_value[t, hit].sum())
    relocations = []
    weight = problem.relocation_weight
    cost = 0.0
    for t in range(T - 1):
        for m in range(M):
            w, w2 = assignment[t][m], assignment[t + 1][m]
            if w is None or w2 is None or w == w2:
                continue
            d = float(problem.distances[pos[w], pos[w2]])
            relocations.append(Relocation(t, m, w, w2, d))
            cost += weight * d
    activated = [m for m in range(M) if any(modes[t][m] is Mode.SERVE for t in range(T))]
    return McsSchedule(assignment, modes, served, relocations, activated, benefit, cost, benefit - cost)


def solve_stage2(
    problem: Stage2Problem,
    backend: str = "bnb",
    node_limit: int | None = None,
    time_limit: float | None = None,
) -> McsSchedule:
    """Solve the scheduling model and rebuild the schedule from the placement variables.

    Raises:
        PlanError: if the solver finds nothing feasible.
        ConsistencyError: if totals recomputed from the schedule disagree
            with the solver objective.
    """
    sol = solve(problem.model, node_limit=node_limit, time_limit=time_limit, backend=backend)
    T, M = problem.periods, problem.config.fleet
    if sol.x is None:
        if sol.status is Status.LIMIT_REACHED:
            empty = [[None] * M for _ in range(T)]
            out = schedule_from_assignment(problem, empty)
            out.status = sol.status
            return out
        raise PlanError(f"stage-2 solve ended with status {sol.status.value}")
    return _extract(problem, sol)


def _extract(problem: Stage2Problem, sol: Solution) -> McsSchedule:
    T, M = problem.periods, problem.config.fleet
    ids = problem.sets.n
    assignment: list[list[str | None]] = []
    for t in range(T):
        row = []
        for m in range(M):
            at = [w for w in ids if sol.x[problem.k[t, m, w]] > 0.5]
            if len(at) > 1:
                raise ConsistencyError(f"unit {m + 1} placed at {len(at)} points in period {t + 1}")
            row.append(at[0] if at else None)
        assignment.append(row)
    out = schedule_from_assignment(problem, assignment)
    out.status = sol.status
    out.solver_objective = sol.objective
    if sol.status is Status.OPTIMAL and sol.objective is not None:
        if abs(out.objective - sol.objective) > OBJ_TOL * max(1.0, abs(sol.objective)):
            raise ConsistencyError(f"schedule totals {out.objective:.9g} disagree with solver objective {sol.objective:.9g}")
    return out


def check_schedule(problem: Stage2Problem, schedule: McsSchedule) -> list[str]:
    """Structural checks on a schedule; returns human-readable violations (empty when sound).

    Covers: one location per unit and period, recharge after serving,
    coverage only from serving units, the activation budget, modes matching
    the point type, and no two consecutive serving periods.
    """
    sets = problem.sets
    n_f, n_m = set(sets.n_f), set(sets.n_m)
    bad = []
    T = schedule.periods
    for t, row in enumerate(schedule.assignment):
        for m, w in enumerate(row):
            mode = schedule.modes[t][m]
            if w is None and mode is not Mode.IDLE:
                bad.append(f"unit {m + 1} period {t + 1}: {mode.value} while unassigned")
            if mode is Mode.SERVE and w not in n_m:
                bad.append(f"unit {m + 1} period {t + 1}: serves at non-service point {w}")
            if mode is Mode.CHARGE and w not in n_f:
                bad.append(f"unit {m + 1} period {t + 1}: charges at non-station point {w}")
            if t + 1 < T and mode is Mode.SERVE:
                nxt = schedule.assignment[t + 1][m]
                if nxt not in n_f:
                    bad.append(f"unit {m + 1}: serves in period {t + 1} without recharging in period {t + 2}")
                if schedule.modes[t + 1][m] is Mode.SERVE:
                    bad.append(f"unit {m + 1}: serves in consecutive periods {t + 1} and {t + 2}")
    m_pos = {w: a for a, w in enumerate(sets.n_m)}
    q_pos = {q: b for b, q in enumerate(sets.q_m)}
    for t, pairs in enumerate(schedule.served):
        for q in pairs:
            b = q_pos[q]
            if not any(w in n_m and problem.coverage[m_pos[w], b] for w in schedule.assignment[t]):
                bad.append(f"period {t + 1}: {q.label()} marked served with no covering unit")
    if len(schedule.activated) > problem.config.max_active:
        bad.append(f"{len(schedule.activated)} units activated, budget allows {problem.config.max_active}")
    return bad


# --------------------------------------------------------------------------- reporting


@dataclass
class KpiReport:
    objective: float
    benefit: float
    relocation: float
    fcs_objective: float
    fcs_count: int
    fcs_by_zone: dict[str, int]
    mcs_active: int
    serve_by_zone: dict[str, int]
    table: list[dict[str, str | int]]

    def as_dict(self) -> dict:
        return {
            "objective": self.objective,
            "benefit": self.benefit,
            "relocation": self.relocation,
            "fcs_objective": self.fcs_objective,
            "fcs_count": self.fcs_count,
            "fcs_by_zone": dict(self.fcs_by_zone),
            "mcs_active": self.mcs_active,
            "serve_by_zone": dict(self.serve_by_zone),
        }


def kpi_report(plan: FcsPlan, schedule: McsSchedule, problem: Stage2Problem, case: str = "") -> KpiReport:
    """Headline numbers plus the per-unit per-period mode table.

    Raises:
        ConsistencyError: if benefit minus relocation cost does not reproduce the objective.
    """
    points = problem.sets.points
    zones = sorted(plan.zone_counts)
    serve = {z: 0 for z in zones}
    rows: list[dict[str, str | int]] = []
    for m in range(schedule.fleet):
        for t in range(schedule.periods):
            w = schedule.assignment[t][m]
            mode = schedule.modes[t][m]
            zone = ""
            if w is not None:
                zone = points[w].zone(problem.network)
                if mode is Mode.SERVE:
                    serve[zone] = serve.get(zone, 0) + 1
            rows.append({"case": case, "mcs_id": f"m{m + 1}", "period": t + 1, "point": w or "", "zone": zone, "mode": mode.value})
    if abs(schedule.benefit - schedule.relocation_cost - schedule.objective) > OBJ_TOL * max(1.0, abs(schedule.objective)):
        raise ConsistencyError("benefit minus relocation cost differs from the objective")
    return KpiReport(
        schedule.objective,
        schedule.benefit,
        schedule.relocation_cost,
        plan.objective,
        len(plan.selected),
        dict(plan.zone_counts),
        len(schedule.activated),
        serve,
        rows,
    )

