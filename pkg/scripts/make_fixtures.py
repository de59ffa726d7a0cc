"""Regenerate the data fixtures shipped in ``src/evplan/data``.

The Bexar-like network reuses the O-D pair lists of the county case study
as its edge set (the real road geometry is not public). Lengths are seeded;
the v16-v17-v18 triangle carries the worked-example distances, and existing
stations sit at the midpoints of the edges whose pairs they are known to
cover. The script asserts that the resulting station domain is exactly the
known covered-pair list before writing anything.

Run from the repository root: ``python3 scripts/make_fixtures.py``.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from pathlib import Path

import numpy as np

from evplan.candgen import ExistingStation, existing_domain
from evplan.io import network_to_dict
from evplan.netcore import Edge, Network, NetworkPoint, RangeConfig, Vertex, build_distance_table, build_od_pairs
from evplan.synth import random_network

DATA = Path(__file__).resolve().parent.parent / "src" / "evplan" / "data"
RANGE = RangeConfig(10.0, 0.5)

ALL_PAIRS = """
1-2 1-4 1-8 1-10 2-3 2-12 2-13 3-4 3-14 4-5 4-17 5-6 5-18 5-34 6-7 6-33 7-8 7-32 8-9 8-30 9-10 9-11 9-28
10-11 11-12 11-27 12-13 12-25 13-14 13-24 14-15 14-22 15-16 15-21 16-17 16-18 16-20 17-18 19-20 19-34
19-35 20-21 20-36 21-22 21-37 22-23 22-39 23-24 23-26 23-40 24-25 25-26 26-27 26-41 27-28 27-42 28-29
28-43 29-30 29-31 29-44 30-31 31-32 31-45 32-33 32-46 33-34 33-47 34-48 35-36 35-49 36-37 36-50 37-38
"""
COVERED = "4-5 13-14 14-15 14-22 15-16 20-21 22-23 22-39 25-26 26-41 34-48"
ZONE_PAIRS = {
    "1": "1-2 1-4 1-8 1-10 2-3 2-12 2-13 3-4 3-14 4-5 4-17 9-10 10-11 16-17 17-18",
    "2": "12-13 12-25 13-14 13-24 14-22 22-23 22-39 23-24 23-26 23-40 24-25 25-26 26-41",
    "3": "8-9 8-30 9-11 9-28 11-12 11-27 26-27 27-28 27-42 28-29 28-43 29-30 29-44",
    "4": "5-6 5-18 5-34 6-33 18-19 19-34 19-35 33-34 33-47 34-48 35-49",
    "5": "14-15 15-16 15-21 16-18 16-20 19-20 20-21 20-36 21-22 21-37 35-36 35-49 36-37 36-50 37-38",
    "6": "6-7 7-8 7-32 29-31 30-31 31-32 31-45 32-33 32-46",
}
ZONE_UNCOVERED = {
    "1": "1-2 1-4 1-8 1-10 2-3 2-12 2-13 3-4 3-14 4-17 9-10 10-11 16-17 17-18",
    "2": "12-13 12-25 13-24 23-24 23-26 23-40 24-25",
    "3": "8-9 8-30 9-11 9-28 11-12 11-27 26-27 27-28 27-42 28-29 28-43 29-30 29-44",
    "4": "5-6 5-18 5-34 6-33 18-19 19-34 19-35 33-34 33-47 35-49",
    "5": "15-21 16-18 16-20 19-20 20-36 21-22 21-37 35-36 35-49 36-37 36-50 37-38",
    "6": "6-7 7-8 7-32 29-31 30-31 31-32 31-45 32-33 32-46",
}
TRIANGLE = {(16, 17): 5.0, (16, 18): 3.0, (17, 18): 4.0}


def parse(text: str) -> list[tuple[int, int]]:
    return [tuple(sorted(map(int, m.groups()))) for m in re.finditer(r"(\d+)-(\d+)", text)]


def label(p: tuple[int, int]) -> str:
    return f"q(v{p[0]},v{p[1]})"


def layout(D: np.ndarray) -> np.ndarray:
    """Classical multidimensional scaling of a distance matrix to 2-D."""
    n = len(D)
    J = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * J @ (D ** 2) @ J
    vals, vecs = np.linalg.eigh(B)
    top = np.argsort(vals)[::-1][:2]
    X = vecs[:, top] * np.sqrt(np.maximum(vals[top], 0.0))
    for k in range(2):
        j = int(np.argmax(np.abs(X[:, k]) > 1e-9))
        if X[j, k] < 0:
            X[:, k] *= -1
    return X - X.min(axis=0)


def bexar() -> None:
    rng = np.random.default_rng(2025)
    edges_idx = sorted(set(parse(ALL_PAIRS)) | {p for z in ZONE_PAIRS.values() for p in parse(z)})
    lengths = {}
    for p in edges_idx:
        lengths[p] = TRIANGLE.get(p, float(rng.integers(12, 19)) / 2.0)  # 6.0 .. 9.0 in half miles
    votes: dict[int, Counter] = {}
    for z, text in ZONE_PAIRS.items():
        for a, b in parse(text):
            votes.setdefault(a, Counter())[z] += 1
            votes.setdefault(b, Counter())[z] += 1
    n = 50
    zone = {}
    for v in range(1, n + 1):
        c = votes.get(v)
        # majority zone; ties go to the lowest zone id
        zone[v] = min(c, key=lambda z: (-c[z], int(z))) if c else "1"
    verts0 = [Vertex(f"v{v}", zone[v]) for v in range(1, n + 1)]
    edges = [Edge(f"v{a}", f"v{b}", lengths[(a, b)]) for a, b in edges_idx]
    flows = {(f"v{a}", f"v{b}"): float(rng.integers(20, 201)) for a, b in edges_idx}
    net0 = Network(verts0, edges, flows)
    table = build_distance_table(net0)
    X = layout(table.matrix)
    verts = [Vertex(v.id, v.zone, round(float(X[k, 0]), 6), round(float(X[k, 1]), 6)) for k, v in enumerate(verts0)]
    net = Network(verts, edges, flows)

    stations = []
    for k, (a, b) in enumerate(parse(COVERED)):
        half = lengths[(a, b)] / 2.0
        stations.append(ExistingStation(f"E{k + 1}", NetworkPoint.on_edge(net, f"v{a}", f"v{b}", half)))
    pairs = build_od_pairs(net, table, RANGE)
    dom = existing_domain(net, table, stations, pairs, RANGE)
    got = {(int(q.origin[1:]), int(q.destination[1:])) for q in dom}
    assert got == set(parse(COVERED)), sorted(got ^ set(parse(COVERED)))
    assert len(pairs) == len(edges_idx)

    out = DATA / "bexar"
    out.mkdir(parents=True, exist_ok=True)
    write(out / "network.json", network_to_dict(net))
    write(out / "stations.json", {
        "stations": [
            {"id": s.id, "edge": list(s.location.edge), "offset": s.location.offset} for s in stations
        ]
    })
    write(out / "reference_sets.json", {
        "all_pairs": [label(p) for p in parse(ALL_PAIRS)],
        "covered_by_existing": [label(p) for p in parse(COVERED)],
        "zones": {
            z: {"all": [label(p) for p in parse(ZONE_PAIRS[z])], "uncovered": [label(p) for p in parse(ZONE_UNCOVERED[z])]}
            for z in ZONE_PAIRS
        },
        "stated_pair_count": 104,
    })
    write(out / "pipeline.json", {
        "network": "network.json",
        "stations": "stations.json",
        "zones": "../equity/zones.csv",
        "zones_meta": "../equity/zones.json",
        "bwm": "../equity/bwm_cases.json",
        "scenarios": "../scenarios.json",
        "range": {"R": 10.0, "alpha": 0.5},
        "stage1": {"c_f": 1.0, "B_f": 10.0},
        "stage2": {"benefit": 10.0, "relocation": 20.0, "c_m": 1.0, "B_m": 10.0, "fleet": 10},
        "solver": {"stage1": "highs", "stage2": "highs"},
        "out": "out",
    })


def worked_example() -> None:
    verts = [Vertex("v16", "5", 0.0, 0.0), Vertex("v17", "1", 5.0, 0.0), Vertex("v18", "1", 1.8, 2.4)]
    edges = [Edge(f"v{a}", f"v{b}", L) for (a, b), L in TRIANGLE.items()]
    flows = {("v16", "v17"): 40.0, ("v16", "v18"): 25.0, ("v17", "v18"): 30.0}
    out = DATA / "worked_example"
    out.mkdir(parents=True, exist_ok=True)
    write(out / "network.json", network_to_dict(Network(verts, edges, flows)))
    write(out / "pipeline.json", {"network": "network.json", "range": {"R": 10.0, "alpha": 0.5}, "out": "out"})


def equity() -> None:
    out = DATA / "equity"
    out.mkdir(parents=True, exist_ok=True)
    (out / "zones.csv").write_text(
        "zone,income,density,transit,ev_ownership\n"
        "1,42000,5200,High,4.5\n"
        "2,60000,3800,Medium,5.1\n"
        "3,37000,6000,Low,2.9\n"
        "4,54000,4600,Medium,3.5\n"
        "5,33000,3000,Low,2.2\n"
        "6,48000,5800,High,3.8\n",
        encoding="utf-8",
    )
    write(out / "zones.json", {
        "directions": {"income": "decreasing", "density": "increasing", "transit": "decreasing", "ev_ownership": "increasing"},
        "ordinals": {"transit": {"High": 1.0, "Medium": 0.5, "Low": 0.0}},
    })
    factors = ["income", "density", "transit", "ev_ownership"]
    cases = [
        ("A", [1, 3, 6, 9], [9, 5, 2, 1]),
        ("B", [3, 1, 6, 9], [5, 9, 2, 1]),
        ("C", [6, 3, 1, 9], [2, 5, 9, 1]),
        ("D", [9, 3, 6, 1], [1, 5, 2, 9]),
    ]
    write(out / "bwm_cases.json", {
        "cases": [
            {
                "name": name,
                "factors": factors,
                "best": factors[ob.index(1)],
                "worst": factors[ow.index(1)],
                "best_to_others": ob,
                "others_to_worst": ow,
            }
            for name, ob, ow in cases
        ]
    })


def scenarios() -> None:
    write(DATA / "scenarios.json", {
        "periods": 4,
        "seed": 42,
        "scenarios": [
            {"label": "peak", "p": 0.2, "mult": [1.2, 1.5]},
            {"label": "shoulder", "p": 0.5, "mult": [0.8, 1.1]},
            {"label": "off-peak", "p": 0.2, "mult": [0.4, 0.7]},
        ],
    })


SYNTH_SEED = 0


def synthetic12() -> None:
    net = random_network(
        SYNTH_SEED, 12, extra_edges=4, flow_density=0.2, min_length=4.0, max_length=9.5,
        zone_ids=["1", "2", "3", "4", "5", "6"],
    )
    out = DATA / "synthetic12"
    out.mkdir(parents=True, exist_ok=True)
    write(out / "network.json", network_to_dict(net))
    write(out / "stations.json", {"stations": [{"id": "E1", "vertex": "v1"}, {"id": "E2", "vertex": "v2"}]})
    base = {
        "network": "network.json",
        "stations": "stations.json",
        "zones": "../equity/zones.csv",
        "zones_meta": "../equity/zones.json",
        "bwm": "../equity/bwm_cases.json",
        "scenarios": "../scenarios.json",
        "range": {"R": 10.0, "alpha": 0.5},
        "stage1": {"c_f": 1.0, "B_f": 2.0},
        "solver": {"stage1": "bnb", "stage2": "highs"},
        "out": "out",
    }
    write(out / "pipeline.json", {**base, "cases": ["A"], "stage2": {"benefit": 10.0, "relocation": 20.0, "c_m": 1.0, "B_m": 2.0, "fleet": 2}})
    write(out / "pipeline_fleet10.json", {**base, "cases": ["A"], "stage2": {"benefit": 10.0, "relocation": 20.0, "c_m": 1.0, "B_m": 10.0, "fleet": 10}})


def write(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


if __name__ == "__main__":
    worked_example()
    bexar()
    equity()
    scenarios()
    synthetic12()
    print(f"fixtures written to {DATA}")
