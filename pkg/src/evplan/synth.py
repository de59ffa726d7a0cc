"""Seeded random networks for oracle tests and synthetic fixtures."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .netcore import Edge, Network, Vertex


def random_network(
    seed: int,
    n_vertices: int = 10,
    extra_edges: int | None = None,
    max_length: float = 10.0,
    min_length: float = 1.0,
    zones: int = 3,
    flow_density: float = 0.5,
    max_flow: float = 100.0,
    integer_lengths: bool = False,
    zone_ids: Sequence[str] | None = None,
) -> Network:
    """Connected network with planar coordinates, zone tags and random O-D flows.

    A random spanning tree guarantees connectivity; ``extra_edges`` chords
    are then added. Lengths are uniform in ``[min_length, max_length]``.
    Each vertex pair gets a positive flow with probability ``flow_density``.
    Zones are tagged ``z1..`` unless ``zone_ids`` names them.
    """
    rng = np.random.default_rng(seed)
    ids = [f"v{k + 1}" for k in range(n_vertices)]
    xy = rng.uniform(0.0, 30.0, size=(n_vertices, 2))
    names = list(zone_ids) if zone_ids is not None else [f"z{k + 1}" for k in range(zones)]
    tags = [names[int(rng.integers(len(names)))] for _ in ids]
    # every zone tag should appear at least once when possible
    for z in range(min(len(names), n_vertices)):
        tags[z] = names[z]
    verts = [Vertex(v, tags[k], round(float(xy[k, 0]), 6), round(float(xy[k, 1]), 6)) for k, v in enumerate(ids)]

    def length() -> float:
        val = float(rng.uniform(min_length, max_length))
        return float(round(val)) if integer_lengths else round(val, 6)

    keys: set[tuple[int, int]] = set()
    order = rng.permutation(n_vertices)
    for k in range(1, n_vertices):
        a, b = int(order[k]), int(order[rng.integers(k)])
        keys.add((min(a, b), max(a, b)))
    extra = n_vertices // 2 if extra_edges is None else extra_edges
    tries = 0
    while extra > 0 and tries < 50 * n_vertices:
        tries += 1
        a, b = map(int, rng.choice(n_vertices, size=2, replace=False))
        key = (min(a, b), max(a, b))
        if key not in keys:
            keys.add(key)
            extra -= 1
    edges = [Edge(ids[a], ids[b], length()) for a, b in sorted(keys)]

    flows = {}
    for i in range(n_vertices):
        for j in range(i + 1, n_vertices):
            if rng.random() < flow_density:
                flows[(ids[i], ids[j])] = round(float(rng.uniform(1.0, max_flow)), 3)
    return Network(verts, edges, flows)
