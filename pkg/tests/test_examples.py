"""Small worked examples, one per documented input/output case of each module."""

import numpy as np
import pytest

from evplan.candgen import (
    Endpoint,
    EndpointCatalog,
    ExistingStation,
    build_catalog,
    delta,
    existing_domain,
    scan_edge,
    uncovered_pairs,
)
from evplan.cli import PipelineConfig, load_inputs, run_candidates, run_stage1, run_stage2, run_weights
from evplan.equity import BwmInput, bwm_feasible, normalize_factors, od_weights, solve_bwm, zone_weights
from evplan.io import load_bwm, load_zone_table
from evplan.milp import Model, Status, VarKind, check_feasible, parse_lp, solve, write_lp
from evplan.netcore import (
    Edge,
    Network,
    NetworkPoint,
    ODPair,
    RangeConfig,
    Vertex,
    build_distance_table,
    build_od_pairs,
    covered_flow,
    covers,
    point_distance,
    point_vertex_distance,
)
from evplan.planner import (
    FcsPlan,
    Mode,
    Stage1Config,
    Stage2Config,
    StageSets,
    build_stage1,
    build_stage2,
    derive_sets,
    kpi_report,
    schedule_from_assignment,
    solve_stage1,
    solve_stage2,
)
from evplan.render import count_elements, render_svg
from evplan.scenario import FlowTensor, Scenario, ScenarioSet, expected_flow, generate_flows

from .conftest import DATA, RANGE
from .instances import small_catalog, small_stage2


def path_network(lengths, flows=None, zones=None):
    ids = [f"p{k}" for k in range(len(lengths) + 1)]
    zones = zones or ["1"] * len(ids)
    verts = [Vertex(v, z, float(k), 0.0) for k, (v, z) in enumerate(zip(ids, zones))]
    edges = [Edge(ids[k], ids[k + 1], float(L)) for k, L in enumerate(lengths)]
    return Network(verts, edges, flows or {})


# --------------------------------------------------------------------------- netcore


def test_four_cycle_opposite_vertices():
    verts = [Vertex(v, "1") for v in "abcd"]
    edges = [Edge("a", "b", 1), Edge("b", "c", 1), Edge("c", "d", 1), Edge("d", "a", 1)]
    table = build_distance_table(Network(verts, edges))
    assert table("a", "c") == 2.0 and table("b", "d") == 2.0
    assert table("a", "a") == 0.0


def test_single_vertex_distance():
    table = build_distance_table(Network([Vertex("a", "1")], []))
    assert table("a", "a") == 0.0


def test_point_distance_examples(worked):
    net, table = worked
    assert point_vertex_distance(net, table, NetworkPoint.at_vertex("v16"), "v17") == 5.0
    path = path_network([5, 4])
    ptable = build_distance_table(path)
    x = NetworkPoint.on_edge(path, "p0", "p1", 2.0)
    assert point_vertex_distance(path, ptable, x, "p2") == ptable("p1", "p2") + 3.0
    assert point_distance(path, ptable, NetworkPoint.on_edge(path, "p0", "p1", 0.0), NetworkPoint.at_vertex("p0")) == 0.0


def test_od_pair_examples():
    far = path_network([6, 6], {("p0", "p2"): 5.0, ("p0", "p1"): 0.0})
    assert build_od_pairs(far, build_distance_table(far), RANGE) == []
    short = path_network([1, 1], {("p0", "p1"): 1, ("p0", "p2"): 1, ("p1", "p2"): 1})
    pairs = build_od_pairs(short, build_distance_table(short), RangeConfig(2.0, 0.5))
    assert [q.key for q in pairs] == [("p0", "p1"), ("p0", "p2"), ("p1", "p2")]


def test_coverage_examples(worked):
    net, table = worked
    assert covers(net, table, NetworkPoint.at_vertex("v16"), ODPair("v16", "v17", 1.0), 5.0)
    path = path_network([4, 9])
    ptable = build_distance_table(path)
    assert not covers(path, ptable, NetworkPoint.at_vertex("p0"), ODPair("p0", "p2"), 5.0)
    mid = NetworkPoint.on_edge(path, "p0", "p1", 2.0)
    assert covers(path, ptable, mid, ODPair("p0", "p1"), 2.0)
    assert covered_flow([]) == 0.0
    assert covered_flow([ODPair("a", "b", 3.0), ODPair("a", "c", 4.5)]) == 7.5


# --------------------------------------------------------------------------- candgen


def test_domain_examples(bexar):
    net, table, stations = bexar
    pairs = build_od_pairs(net, table, RANGE)
    assert existing_domain(net, table, [], pairs, RANGE) == []
    domain = existing_domain(net, table, stations, pairs, RANGE)
    labels = {q.label() for q in domain}
    assert {"q(v4,v5)", "q(v13,v14)"} <= labels
    rest = {q.label() for q in uncovered_pairs(pairs, domain)}
    assert "q(v4,v5)" not in rest and "q(v1,v2)" in rest
    assert uncovered_pairs(pairs, []) == pairs
    assert uncovered_pairs(pairs, pairs) == []


def test_station_at_origin_covers_its_pair():
    net = path_network([3, 3], {("p0", "p1"): 2.0})
    table = build_distance_table(net)
    pairs = build_od_pairs(net, table, RANGE)
    assert existing_domain(net, table, [ExistingStation("E", NetworkPoint.at_vertex("p0"))], pairs, RANGE) == pairs


def test_delta_negative_when_out_of_reach():
    net = path_network([9, 2, 9], {("p0", "p3"): 1.0})
    table = build_distance_table(net)
    assert delta(table, ODPair("p0", "p3"), net.edge("p1", "p2"), "p1", 5.0) < 0


def test_symmetric_edge_gives_mirrored_endpoints():
    net = path_network([3, 4, 3], {("p0", "p3"): 1.0})
    table = build_distance_table(net)
    edge = net.edge("p1", "p2")
    offs = sorted({round(r.offset, 9) for r in scan_edge(table, edge, [ODPair("p0", "p3", 1.0)], 5.0)})
    assert offs
    assert offs == sorted(round(edge.length - o, 9) for o in offs)


def test_single_edge_catalog_has_two_vertex_endpoints():
    net = path_network([5], {("p0", "p1"): 5.0})
    table = build_distance_table(net)
    cat = build_catalog(net, table, build_od_pairs(net, table, RANGE), RANGE)
    assert [ep.location.vertex for ep in cat.endpoints] == ["p0", "p1"]
    assert cat.matrix.tolist() == [[1], [1]]


def test_short_edge_keeps_u_turn_boundaries():
    # U-turn reach from each end is 5 - 4 = 1, so offsets 1 and 3 are boundaries too
    net = path_network([4], {("p0", "p1"): 5.0})
    table = build_distance_table(net)
    cat = build_catalog(net, table, build_od_pairs(net, table, RANGE), RANGE)
    offs = [0.0 if ep.location.is_vertex and ep.location.vertex == "p0" else 4.0 if ep.location.is_vertex else ep.location.offset for ep in cat.endpoints]
    assert sorted(offs) == [0.0, 1.0, 3.0, 4.0]
    assert cat.matrix.tolist() == [[1]] * 4


def test_empty_flows_give_empty_catalog(worked):
    net, table = worked
    cat = build_catalog(net, table, [], RANGE)
    assert cat.matrix.shape[1] == 0
    assert all(f == 0 for f in cat.covered_flow)
    no_edges = build_catalog(path_network([4]), build_distance_table(path_network([4])), [], RANGE)
    assert len(no_edges) == 0


def test_bexar_zone_partition(bexar):
    net, table, stations = bexar
    pairs = build_od_pairs(net, table, RANGE)
    rest = uncovered_pairs(pairs, existing_domain(net, table, stations, pairs, RANGE))
    cat = build_catalog(net, table, rest, RANGE, stations)
    part = cat.zone_partition()
    flat = [w for ws in part.values() for w in ws]
    assert sorted(flat) == sorted(ep.id for ep in cat.endpoints)
    assert len(flat) == len(set(flat))


# --------------------------------------------------------------------------- equity


def test_uniform_bwm():
    inp = BwmInput(("a", "b", "c", "d"), 0, 3, (1, 1, 1, 1), (1, 1, 1, 1))
    res = solve_bwm(inp)
    assert res.epsilon_star == 0.0
    np.testing.assert_allclose(res.theta, 0.25, atol=1e-9)


def test_case_a_feasibility_bracket():
    inp = load_bwm(DATA / "equity" / "bwm_cases.json")["A"]
    res = solve_bwm(inp)
    np.testing.assert_allclose(res.theta, (0.580, 0.260, 0.096, 0.063), atol=0.02)
    assert bwm_feasible(inp, res.epsilon_star + 0.01)
    assert res.epsilon_star > 0.01
    assert not bwm_feasible(inp, res.epsilon_star - 0.01)


def test_normalization_examples():
    table = load_zone_table(DATA / "equity" / "zones.csv", DATA / "equity" / "zones.json")
    G = normalize_factors(table)
    inc, ev = table.factors.index("income"), table.factors.index("ev_ownership")
    assert G[0, inc] == pytest.approx(0.67, abs=0.005)
    assert G[0, ev] == pytest.approx(0.79, abs=0.005)
    low = int(np.argmin(table.values[:, ev]))
    assert G[low, ev] == 0.0


def test_zone_weight_examples():
    table = load_zone_table(DATA / "equity" / "zones.csv", DATA / "equity" / "zones.json")
    G = normalize_factors(table)
    assert zone_weights(G, (0.580, 0.260, 0.096, 0.063), table.zones)["1"] == pytest.approx(0.63, abs=0.005)
    assert zone_weights(G, (0.109, 0.264, 0.566, 0.062), table.zones)["3"] == pytest.approx(0.94, abs=0.01)
    assert zone_weights(np.zeros((1, 4)), (0.25,) * 4, ["z"]) == {"z": 0.0}


def test_od_weight_examples():
    net = Network([Vertex("a", "1"), Vertex("b", "1"), Vertex("c", "2")], [Edge("a", "b", 1), Edge("b", "c", 1)])
    mu = {"1": 0.63, "2": 0.86}
    w = od_weights(mu, net, [ODPair("a", "b"), ODPair("a", "c")])
    assert w[ODPair("a", "b")] == 0.63
    assert w[ODPair("a", "c")] == 0.86


# --------------------------------------------------------------------------- scenario


def test_identity_multipliers_reproduce_base_flows():
    pairs = [ODPair("a", "b", 10.0), ODPair("a", "c", 4.0)]
    ss = ScenarioSet(3, (Scenario("x", 0.5, (1.0, 1.0)), Scenario("y", 0.5, (1.0, 1.0))))
    ft = generate_flows(pairs, ss)
    assert np.all(ft.flows == np.array([10.0, 4.0]))


@pytest.mark.parametrize(
    "probs, flows, expected",
    [((1.0,), (7.0,), 7.0), ((0.5, 0.5), (3.0, 3.0), 3.0), ((0.2, 0.5, 0.2), (10.0, 5.0, 2.0), 4.9)],
)
def test_expected_flow_examples(probs, flows, expected):
    q = ODPair("a", "b", 1.0)
    ss = ScenarioSet(2, tuple(Scenario(f"s{k}", p) for k, p in enumerate(probs)))
    ft = FlowTensor(np.tile(np.array(flows)[None, :, None], (2, 1, 1)), (q,))
    assert expected_flow(ft, ss, q, 1) == pytest.approx(expected)


# --------------------------------------------------------------------------- milp


def test_milp_examples():
    m = Model(sense="max")
    x = m.add_binary("x")
    m.set_objective({x: 1.0})
    sol = solve(m)
    assert sol["x"] == 1 and sol.objective == 1.0
    m.add_constr({x: 1.0}, ">=", 1.0)
    m.add_constr({x: 1.0}, "<=", 0.0)
    assert solve(m).status is Status.INFEASIBLE


def test_feasibility_examples():
    ok = Model()
    z = ok.add_var("z")
    ok.add_constr({z: 1.0}, ">=", 0.0)
    ok.add_constr({z: 1.0}, "<=", 1.0)
    assert check_feasible(ok)
    bad = Model()
    z = bad.add_var("z")
    bad.add_constr({z: 1.0}, ">=", 2.0)
    bad.add_constr({z: 1.0}, "<=", 1.0)
    assert not check_feasible(bad)


def test_constant_objective_file():
    m = Model()
    m.add_binary("x")
    text = write_lp(m)
    assert "\\ constant objective" in text
    assert " obj: 0" in text
    assert solve(parse_lp(text)).objective == 0.0


def test_bexar_stage1_file_declares_all_binaries():
    cfg = PipelineConfig.load(DATA / "bexar" / "pipeline.json")
    inp = load_inputs(cfg)
    cand = run_candidates(cfg, inp)
    mu = {q: 0.0 for q in cand.catalog.pairs}
    back = parse_lp(write_lp(build_stage1(cand.catalog, None, mu, cfg.stage1).model))
    n_bin = sum(v.kind is VarKind.BINARY for v in back.variables)
    assert n_bin == len(cand.catalog) + len(cand.catalog.pairs)


# --------------------------------------------------------------------------- planner, stage 1


def test_budget_below_unit_cost_selects_nothing():
    cat, mu = small_catalog(1)
    plan = solve_stage1(build_stage1(cat, None, mu, Stage1Config(c_f=2.0, B_f=1.5)))
    assert plan.selected == [] and plan.objective == 0.0


def test_dominant_endpoint_is_selected():
    cat, mu = small_catalog(2)
    cat.matrix[3, :] = 1
    plan = solve_stage1(build_stage1(cat, None, mu, Stage1Config(B_f=1.0)))
    assert plan.selected == [cat.endpoints[3].id]
    assert plan.objective == pytest.approx(sum((1 + mu[q]) * q.flow for q in cat.pairs))


@pytest.mark.parametrize("seed", range(5))
def test_doubling_flows_doubles_objective(seed):
    cat, mu = small_catalog(seed)
    cfg = Stage1Config(B_f=2.0)
    base = solve_stage1(build_stage1(cat, None, mu, cfg)).objective
    doubled = solve_stage1(build_stage1(cat, {q: 2 * q.flow for q in cat.pairs}, mu, cfg)).objective
    assert doubled == pytest.approx(2 * base)


def test_bexar_ten_station_budget_and_sets():
    cfg = PipelineConfig.load(DATA / "bexar" / "pipeline.json")
    inp = load_inputs(cfg)
    cand = run_candidates(cfg, inp)
    for case in run_weights(inp, cand):
        run_stage1(cfg, inp, cand, case)
        assert len(case.plan.selected) == 10
        sets = case.sets
        assert len(sets.n) == len(inp.stations) + len(cand.catalog)
        assert set(sets.n_f) | set(sets.n_m) == set(sets.n)
        assert not set(sets.n_f) & set(sets.n_m)


def test_derive_sets_edge_cases():
    cat, _ = small_catalog(3)
    empty = derive_sets(FcsPlan([], [], 0.0, {}), [], cat)
    assert empty.n_f == [] and empty.q_m == cat.pairs
    full = derive_sets(FcsPlan([cat.endpoints[0].id], list(cat.pairs), 0.0, {}), [], cat)
    assert full.q_m == []


# --------------------------------------------------------------------------- planner, stage 2


def serve_then_charge(benefit=10.0, fleet=1):
    """One unit, two periods, one pair servable from p0; the only station sits 8 miles away at p2."""
    net = path_network([2, 6], {("p0", "p1"): 10.0})
    table = build_distance_table(net)
    q = ODPair("p0", "p1", 10.0)
    eps = [Endpoint("w1", NetworkPoint.at_vertex("p0")), Endpoint("w2", NetworkPoint.at_vertex("p2"))]
    cat = EndpointCatalog(net, [q], eps, [[q], []], [10.0, 0.0], np.array([[1], [0]], dtype=np.int8))
    sets = StageSets({ep.id: ep.location for ep in eps}, ["w2"], ["w1"], [q])
    ss = ScenarioSet(2, (Scenario("only", 1.0),), modulation=(1.0, 0.1))
    cfg = Stage2Config(benefit=benefit, relocation=1.0, c_m=1.0, B_m=1.0, fleet=fleet)
    return build_stage2(sets, cat, generate_flows([q], ss), ss, {q: 0.0}, table, cfg)


def test_serve_then_charge_by_hand():
    prob = serve_then_charge()
    sched = solve_stage2(prob)
    assert sched.assignment == [["w1"], ["w2"]]
    assert sched.modes == [[Mode.SERVE], [Mode.CHARGE]]
    assert sched.benefit == pytest.approx(10.0 * 10.0)
    assert sched.relocation_cost == pytest.approx(8.0)
    assert sched.objective == pytest.approx(92.0)


def test_zero_benefit_means_no_deployment():
    sched = solve_stage2(serve_then_charge(benefit=0.0))
    assert sched.objective == 0.0
    assert sched.activated == [] and sched.relocations == []


@pytest.mark.parametrize("seed", range(5))
def test_optimal_schedule_is_nonnegative_and_reaccumulates(seed):
    sets, cat, tensor, scen, mu, table, cfg = small_stage2(seed)
    prob = build_stage2(sets, cat, tensor, scen, mu, table, cfg)
    sched = solve_stage2(prob)
    assert sched.objective >= -1e-9
    # recompute totals from the raw inputs
    P = scen.probabilities
    ep_row = {ep.id: w for w, ep in enumerate(cat.endpoints)}
    benefit = 0.0
    for t in range(scen.periods):
        for k, q in enumerate(sets.q_m):
            if any(w in sets.n_m and cat.matrix[ep_row[w], cat.pairs.index(q)] for w in sched.assignment[t]):
                benefit += cfg.benefit * (1 + mu[q]) * float(P @ tensor.flows[t, :, tensor.index[q.key]])
    moves = 0.0
    for t in range(scen.periods - 1):
        for m in range(cfg.fleet):
            a, b = sched.assignment[t][m], sched.assignment[t + 1][m]
            if a is not None and b is not None:
                moves += point_distance(cat.network, table, sets.points[a], sets.points[b])
    reloc = cfg.relocation * scen.probability_mass * moves
    rep = kpi_report(FcsPlan([], [], 0.0, {}), sched, prob)
    assert rep.benefit == pytest.approx(benefit, rel=1e-9, abs=1e-9)
    assert rep.relocation == pytest.approx(reloc, rel=1e-9, abs=1e-9)


def test_empty_schedule_report_is_zero():
    prob = serve_then_charge()
    sched = schedule_from_assignment(prob, [[None], [None]])
    rep = kpi_report(FcsPlan([], [], 0.0, {}), sched, prob)
    assert (rep.objective, rep.benefit, rep.relocation, rep.mcs_active) == (0.0, 0.0, 0.0, 0)


# --------------------------------------------------------------------------- pipeline and rendering


def test_zero_budgets_give_empty_plan_and_schedule():
    cfg = PipelineConfig.load(DATA / "synthetic12" / "pipeline.json")
    cfg.stage1 = Stage1Config(B_f=0.0)
    cfg.stage2 = Stage2Config(B_m=0.0, fleet=2)
    inp = load_inputs(cfg)
    cand = run_candidates(cfg, inp)
    (case,) = run_weights(inp, cand)
    run_stage1(cfg, inp, cand, case)
    run_stage2(cfg, inp, cand, case, generate_flows(cand.catalog.pairs, inp.scenarios))
    assert case.plan.selected == []
    assert case.schedule.activated == []
    rep = case.report
    assert (rep.objective, rep.benefit, rep.relocation) == (0.0, 0.0, 0.0)


def test_render_marker_counts():
    cfg = PipelineConfig.load(DATA / "synthetic12" / "pipeline.json")
    inp = load_inputs(cfg)
    cand = run_candidates(cfg, inp)
    (case,) = run_weights(inp, cand)
    run_stage1(cfg, inp, cand, case)
    empty = render_svg(inp.network, cand.catalog, FcsPlan([], [], 0.0, {}))
    assert count_elements(empty, "fcs") == 0 and count_elements(empty, "mcs") == 0
    svg = render_svg(inp.network, cand.catalog, case.plan)
    assert count_elements(svg, "fcs") == len(case.plan.selected) > 0
