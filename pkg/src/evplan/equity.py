"""Factor weights from best-worst pairwise ratings, and zone / O-D equity weights."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .milp import Model, Status, check_feasible, solve
from .netcore import Network, ODPair


class EquityError(ValueError):
    pass


class Direction(str, enum.Enum):
    """Whether a larger raw value signals more need (``increasing``) or less (``decreasing``)."""

    INCREASING = "increasing"
    DECREASING = "decreasing"


#: Default ordinal coding for qualitative factors such as transit access.
DEFAULT_ORDINALS = {"high": 1.0, "medium": 0.5, "low": 0.0}


@dataclass(frozen=True)
class BwmInput:
    factors: tuple[str, ...]
    best: int
    worst: int
    best_to_others: tuple[float, ...]
    others_to_worst: tuple[float, ...]

    def __post_init__(self) -> None:
        n = len(self.factors)
        if n < 2:
            raise EquityError("need at least two factors")
        if len(self.best_to_others) != n or len(self.others_to_worst) != n:
            raise EquityError("rating vectors must have one entry per factor")
        if not (0 <= self.best < n and 0 <= self.worst < n):
            raise EquityError("best/worst index out of range")
        for v in (*self.best_to_others, *self.others_to_worst):
            if not 1 <= v <= 9:
                raise EquityError(f"ratings must lie in [1, 9], got {v}")
        if self.best_to_others[self.best] != 1:
            raise EquityError("best-to-others rating of the best factor must be 1")
        if self.others_to_worst[self.worst] != 1:
            raise EquityError("others-to-worst rating of the worst factor must be 1")
        if self.best_to_others[self.worst] != self.others_to_worst[self.best]:
            raise EquityError("best-over-worst rating differs between the two vectors")

    @classmethod
    def from_names(
        cls,
        factors: Sequence[str],
        best: str,
        worst: str,
        best_to_others: Sequence[float],
        others_to_worst: Sequence[float],
    ) -> BwmInput:
        factors = tuple(factors)
        for name in (best, worst):
            if name not in factors:
                raise EquityError(f"unknown factor {name!r}")
        return cls(
            factors,
            factors.index(best),
            factors.index(worst),
            tuple(float(v) for v in best_to_others),
            tuple(float(v) for v in others_to_worst),
        )


@dataclass(frozen=True)
class BwmResult:
    theta: np.ndarray
    epsilon_star: float
    bracket: tuple[float, float]
    factors: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.factors, map(float, self.theta)))


def _bwm_model(inp: BwmInput, eps: float) -> Model:
    """Ratio constraints at fixed deviation ``eps``, written linearly in theta."""
    n = len(inp.factors)
    m = Model("bwm", sense="min")
    for name in inp.factors:
        m.add_var(f"theta_{name}", lb=0.0)
    b, w = inp.best, inp.worst
    for i in range(n):
        obi, oiw = inp.best_to_others[i], inp.others_to_worst[i]
        if i != b:
            # |theta_b / theta_i - o_bi| <= eps
            m.add_constr({b: 1.0, i: -(obi + eps)}, "<=", 0.0)
            m.add_constr({b: -1.0, i: obi - eps}, "<=", 0.0)
        if i != w:
            # |theta_i / theta_w - o_iw| <= eps
            m.add_constr({i: 1.0, w: -(oiw + eps)}, "<=", 0.0)
            m.add_constr({i: -1.0, w: oiw - eps}, "<=", 0.0)
    m.add_constr({j: 1.0 for j in range(n)}, "=", 1.0, "normalize")
    return m


def bwm_feasible(inp: BwmInput, eps: float) -> bool:
    return check_feasible(_bwm_model(inp, eps))


def solve_bwm(inp: BwmInput, tol: float = 1e-6, eps_max: float = 9.0) -> BwmResult:
    """Minimize the largest deviation between weight ratios and ratings.

    Bisects on the deviation; each step is a linear feasibility check. The
    optimal weights need not be unique, so the reported vector is the centre
    of the optimal face: the mean of the solutions minimizing and maximizing
    each weight at the certified deviation.

    Raises:
        EquityError: if the system is infeasible even at ``eps_max``.
    """
    if bwm_feasible(inp, 0.0):
        lo = hi = 0.0
    else:
        if not bwm_feasible(inp, eps_max):
            raise EquityError(f"no weights satisfy the ratings within deviation {eps_max}")
        lo, hi = 0.0, eps_max
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if bwm_feasible(inp, mid):
                hi = mid
            else:
                lo = mid
    model = _bwm_model(inp, hi)
    n = len(inp.factors)
    extremes = []
    for i in range(n):
        for sense in ("min", "max"):
            model.set_objective({i: 1.0}, sense=sense)
            sol = solve(model)
            if sol.status is not Status.OPTIMAL:
                raise EquityError(f"weight extreme LP failed with status {sol.status.value}")
            extremes.append(sol.x)
    theta = np.clip(np.mean(extremes, axis=0), 0.0, None)
    theta = theta / theta.sum()
    return BwmResult(theta, hi, (lo, hi), inp.factors)


@dataclass(frozen=True)
class ZoneFactorTable:
    """Raw socioeconomic values: ``values[z, i]`` for zone ``zones[z]`` and factor ``factors[i]``."""

    zones: tuple[str, ...]
    factors: tuple[str, ...]
    values: np.ndarray
    directions: tuple[Direction, ...]

    def __post_init__(self) -> None:
        if len(self.zones) < 2:
            raise EquityError("need at least two zones to normalize factors")
        if self.values.shape != (len(self.zones), len(self.factors)):
            raise EquityError(f"factor table shape {self.values.shape} does not match zones x factors")
        if len(self.directions) != len(self.factors):
            raise EquityError("one direction flag per factor is required")
        spread = self.values.max(axis=0) - self.values.min(axis=0)
        for name, s in zip(self.factors, spread):
            if not s > 0:
                raise EquityError(f"factor {name!r} has zero spread across zones; cannot normalize")

    @classmethod
    def from_records(
        cls,
        rows: Mapping[str, Mapping[str, float | str]],
        directions: Mapping[str, Direction | str],
        ordinals: Mapping[str, Mapping[str, float]] | None = None,
    ) -> ZoneFactorTable:
        """Build from ``{zone: {factor: value}}``; string values go through ``ordinals``."""
        zones = tuple(rows)
        factors = tuple(directions)
        values = np.zeros((len(zones), len(factors)))
        ordinals = ordinals or {}
        for z, zone in enumerate(zones):
            for i, f in enumerate(factors):
                raw = rows[zone].get(f)
                if raw is None:
                    raise EquityError(f"zone {zone!r} lacks factor {f!r}")
                values[z, i] = _numeric(raw, ordinals.get(f, DEFAULT_ORDINALS), f)
        return cls(zones, factors, values, tuple(Direction(directions[f]) for f in factors))


def _numeric(raw: float | str, mapping: Mapping[str, float], factor: str) -> float:
    if isinstance(raw, str):
        key = raw.strip()
        try:
            return float(key)
        except ValueError:
            pass
        lowered = {k.lower(): v for k, v in mapping.items()}
        if key.lower() not in lowered:
            raise EquityError(f"factor {factor!r}: no ordinal mapping for {raw!r}")
        return float(lowered[key.lower()])
    return float(raw)


def normalize_factors(table: ZoneFactorTable) -> np.ndarray:
    """Min-max scale each factor to [0, 1]; decreasing-need factors are flipped to 1 - G."""
    lo = table.values.min(axis=0)
    hi = table.values.max(axis=0)
    G = (table.values - lo) / (hi - lo)
    for i, d in enumerate(table.directions):
        if d is Direction.DECREASING:
            G[:, i] = 1.0 - G[:, i]
    return G


def zone_weights(G: np.ndarray, theta: Sequence[float], zones: Sequence[str]) -> dict[str, float]:
    theta = np.asarray(theta, dtype=float)
    if G.shape != (len(zones), theta.size):
        raise EquityError(f"normalized table {G.shape} does not match {len(zones)} zones x {theta.size} weights")
    mu = G @ theta
    return {z: float(v) for z, v in zip(zones, mu)}


def od_weights(mu_z: Mapping[str, float], network: Network, pairs: Sequence[ODPair]) -> dict[ODPair, float]:
    """O-D weight = larger of the origin and destination zone weights."""
    out = {}
    for q in pairs:
        zones = []
        for v in (q.origin, q.destination):
            z = network.zone_of(v)
            if z not in mu_z:
                raise EquityError(f"vertex {v!r} is in zone {z!r} which has no weight")
            zones.append(mu_z[z])
        out[q] = max(zones)
    return out


@dataclass
class EquityProfile:
    theta: BwmResult
    G: np.ndarray
    table: ZoneFactorTable
    mu_z: dict[str, float]
    mu_q: dict[ODPair, float] = field(default_factory=dict)


def build_profile(inp: BwmInput, table: ZoneFactorTable, network: Network, pairs: Sequence[ODPair]) -> EquityProfile:
    """Weights, normalized table and zone / O-D weights; factors are matched by name."""
    if set(inp.factors) != set(table.factors):
        raise EquityError(f"rating factors {sorted(inp.factors)} differ from table factors {sorted(table.factors)}")
    res = solve_bwm(inp)
    weights = res.as_dict()
    G = normalize_factors(table)
    mu_z = zone_weights(G, [weights[f] for f in table.factors], table.zones)
    return EquityProfile(res, G, table, mu_z, od_weights(mu_z, network, pairs))
