import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evplan.io import load_scenarios
from evplan.netcore import ODPair
from evplan.scenario import (
    DEFAULT_SCENARIOS,
    FlowTensor,
    Scenario,
    ScenarioError,
    ScenarioSet,
    expected_flow,
    generate_flows,
)

from .conftest import DATA

PAIRS = [ODPair("a", "b", 100.0), ODPair("a", "c", 40.0), ODPair("b", "c", 7.5)]


def test_defaults():
    ss = ScenarioSet()
    assert ss.periods == 4
    assert [s.label for s in ss.scenarios] == ["peak", "shoulder", "off-peak"]
    np.testing.assert_allclose(ss.probabilities, [0.2, 0.5, 0.2])
    assert ss.probability_mass == pytest.approx(0.9)
    assert ss.seed == 42


def test_fixture_file_matches_defaults():
    ss = load_scenarios(DATA / "scenarios.json")
    assert ss.scenarios == DEFAULT_SCENARIOS
    assert ss.periods == 4


def test_unnormalized_probabilities_warn(caplog):
    with caplog.at_level(logging.WARNING):
        assert ScenarioSet().warn_if_unnormalized()
    assert "0.9" in caplog.text
    assert not ScenarioSet().normalized().warn_if_unnormalized()
    assert ScenarioSet().normalized().probability_mass == pytest.approx(1.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"periods": 1},
        {"scenarios": ()},
        {"scenarios": (Scenario("a", 0.5), Scenario("a", 0.5))},
        {"periods": 2, "modulation": (1.0,)},
        {"periods": 2, "modulation": (1.0, -1.0)},
    ],
)
def test_scenario_set_validation(kwargs):
    with pytest.raises(ScenarioError):
        ScenarioSet(**kwargs)


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        Scenario("x", -0.1)
    with pytest.raises(ScenarioError):
        Scenario("x", 0.1, (2.0, 1.0))


def test_from_dict_round_trip_and_overrides():
    ss = ScenarioSet(3, (Scenario("a", 0.3, (0.5, 0.6)),), 9, (1.0, 2.0, 0.5))
    assert ScenarioSet.from_dict(ss.to_dict()) == ss
    assert ScenarioSet.from_dict(ss.to_dict(), seed=5).seed == 5
    assert ScenarioSet.from_dict(ss.to_dict(), normalize_probs=True).probability_mass == pytest.approx(1.0)


def test_tensor_shape_lookup_and_expectation():
    ss = ScenarioSet()
    ft = generate_flows(PAIRS, ss)
    assert ft.flows.shape == (4, 3, 3)
    assert ft(2, 1, PAIRS[1]) == ft.flows[2, 1, 1]
    e = expected_flow(ft, ss, PAIRS[0], 3)
    assert e == pytest.approx(float(ss.probabilities @ ft.flows[3, :, 0]))


def test_draw_order_is_period_scenario_pair():
    ss = ScenarioSet(seed=11)
    ft = generate_flows(PAIRS, ss)
    rng = np.random.Generator(np.random.Philox(11))
    for t in range(4):
        for s, sc in enumerate(ss.scenarios):
            u = rng.uniform(*sc.mult, size=len(PAIRS))
            np.testing.assert_array_equal(ft.flows[t, s], [q.flow for q in PAIRS] * u)


def test_modulation_scales_periods():
    plain = generate_flows(PAIRS, ScenarioSet(periods=2, seed=3))
    mod = generate_flows(PAIRS, ScenarioSet(periods=2, seed=3, modulation=(1.0, 2.0)))
    np.testing.assert_allclose(mod.flows[1], 2 * plain.flows[1])
    np.testing.assert_allclose(mod.flows[0], plain.flows[0])


def test_tensor_rejects_negative_and_bad_shape():
    with pytest.raises(ScenarioError):
        FlowTensor(-np.ones((2, 1, 1)), (PAIRS[0],))
    with pytest.raises(ScenarioError):
        FlowTensor(np.ones((2, 1, 2)), (PAIRS[0],))


def test_empty_pair_list():
    assert generate_flows([], ScenarioSet()).flows.shape == (4, 3, 0)


# --------------------------------------------------------------------------- properties


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), flows=st.lists(st.floats(0, 500), min_size=1, max_size=8))
def test_flows_are_deterministic_nonnegative_and_banded(seed, flows):
    pairs = [ODPair(f"o{k}", f"d{k}", f) for k, f in enumerate(flows)]
    ss = ScenarioSet(seed=seed)
    a = generate_flows(pairs, ss)
    b = generate_flows(pairs, ss)
    assert np.array_equal(a.flows, b.flows)
    assert np.all(a.flows >= 0)
    base = np.array(flows)
    for s, sc in enumerate(ss.scenarios):
        lo, hi = sc.mult
        assert np.all(a.flows[:, s] >= lo * base - 1e-9)
        assert np.all(a.flows[:, s] <= hi * base + 1e-9)
