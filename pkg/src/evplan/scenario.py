"""Periods, demand scenarios and the per-period per-scenario flow tensor."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .netcore import ODPair

log = logging.getLogger(__name__)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    label: str
    probability: float
    mult: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self) -> None:
        if not (self.probability >= 0 and math.isfinite(self.probability)):
            raise ScenarioError(f"scenario {self.label!r}: probability must be a nonnegative number")
        lo, hi = self.mult
        if not (0 <= lo <= hi):
            raise ScenarioError(f"scenario {self.label!r}: multiplier range must satisfy 0 <= lo <= hi, got {self.mult}")


DEFAULT_SCENARIOS = (
    Scenario("peak", 0.2, (1.2, 1.5)),
    Scenario("shoulder", 0.5, (0.8, 1.1)),
    Scenario("off-peak", 0.2, (0.4, 0.7)),
)


@dataclass(frozen=True)
class ScenarioSet:
    """Planning periods and demand scenarios.

    Attributes:
        periods: number of periods |T| (at least 2).
        scenarios: labelled scenarios with probabilities and multiplier bands.
        seed: seed of the counter-based generator used for flow draws.
        modulation: optional per-period flow factor, default 1.0 everywhere.
    """

    periods: int = 4
    scenarios: tuple[Scenario, ...] = DEFAULT_SCENARIOS
    seed: int = 42
    modulation: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.periods < 2:
            raise ScenarioError(f"need at least two periods, got {self.periods}")
        if not self.scenarios:
            raise ScenarioError("need at least one scenario")
        labels = [s.label for s in self.scenarios]
        if len(set(labels)) != len(labels):
            raise ScenarioError("scenario labels must be unique")
        if self.modulation is not None:
            if len(self.modulation) != self.periods:
                raise ScenarioError(f"modulation has {len(self.modulation)} entries for {self.periods} periods")
            if any(m < 0 for m in self.modulation):
                raise ScenarioError("period modulation factors must be nonnegative")

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios])

    @property
    def probability_mass(self) -> float:
        return float(self.probabilities.sum())

    def period_factors(self) -> np.ndarray:
        return np.ones(self.periods) if self.modulation is None else np.asarray(self.modulation, dtype=float)

    def normalized(self) -> ScenarioSet:
        """Copy with probabilities rescaled to sum to one."""
        total = self.probability_mass
        if total <= 0:
            raise ScenarioError("cannot normalize probabilities that sum to zero")
        scen = tuple(Scenario(s.label, s.probability / total, s.mult) for s in self.scenarios)
        return ScenarioSet(self.periods, scen, self.seed, self.modulation)

    def warn_if_unnormalized(self) -> bool:
        total = self.probability_mass
        if abs(total - 1.0) > 1e-9:
            log.warning("scenario probabilities sum to %.6g, not 1; using them as given", total)
            return True
        return False

    @classmethod
    def from_dict(cls, data: Mapping, seed: int | None = None, normalize_probs: bool = False) -> ScenarioSet:
        scen = data.get("scenarios")
        scenarios = (
            DEFAULT_SCENARIOS
            if scen is None
            else tuple(Scenario(str(s["label"]), float(s["p"]), tuple(map(float, s.get("mult", (1.0, 1.0))))) for s in scen)
        )
        mod = data.get("modulation")
        out = cls(
            int(data.get("periods", 4)),
            scenarios,
            int(data.get("seed", 42) if seed is None else seed),
            None if mod is None else tuple(map(float, mod)),
        )
        return out.normalized() if normalize_probs else out

    def to_dict(self) -> dict:
        d = {
            "periods": self.periods,
            "seed": self.seed,
            "scenarios": [{"label": s.label, "p": s.probability, "mult": list(s.mult)} for s in self.scenarios],
        }
        if self.modulation is not None:
            d["modulation"] = list(self.modulation)
        return d


@dataclass(frozen=True)
class FlowTensor:
    """``flows[t, s, k]`` is the flow of ``pairs[k]`` in period ``t`` under scenario ``s``."""

    flows: np.ndarray
    pairs: tuple[ODPair, ...]
    index: dict[tuple[str, str], int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.flows.ndim != 3 or self.flows.shape[2] != len(self.pairs):
            raise ScenarioError(f"tensor shape {self.flows.shape} does not match {len(self.pairs)} pairs")
        if np.any(self.flows < 0):
            raise ScenarioError("flow tensor has negative entries")
        object.__setattr__(self, "index", {q.key: k for k, q in enumerate(self.pairs)})

    def __call__(self, t: int, s: int, q: ODPair) -> float:
        return float(self.flows[t, s, self.index[q.key]])


def generate_flows(pairs: Sequence[ODPair], scenario_set: ScenarioSet) -> FlowTensor:
    """Draw scenario flows as base flow times a uniform multiplier times the period factor.

    One uniform draw per entry, in period, then scenario, then pair order
    (pairs in the order given, which callers keep sorted by vertex index).
    The stream comes from a Philox generator keyed by the set's seed.
    """
    rng = np.random.Generator(np.random.Philox(scenario_set.seed))
    base = np.array([q.flow for q in pairs], dtype=float)
    factors = scenario_set.period_factors()
    T, S, Q = scenario_set.periods, len(scenario_set.scenarios), len(pairs)
    out = np.empty((T, S, Q))
    for t in range(T):
        for s, sc in enumerate(scenario_set.scenarios):
            lo, hi = sc.mult
            u = rng.uniform(lo, hi, size=Q) if Q else np.zeros(0)
            out[t, s] = base * u * factors[t]
    return FlowTensor(out, tuple(pairs))


def expected_flow(tensor: FlowTensor, scenario_set: ScenarioSet, q: ODPair, t: int) -> float:
    """Probability-weighted flow of ``q`` in period ``t``."""
    k = tensor.index[q.key]
    return float(scenario_set.probabilities @ tensor.flows[t, :, k])
